"""
Synthetic planar worlds for tests and experiments.

- scene: procedural rooms, camera sampling and query records
- scene_io: scene directories on disk
- corruption: noisy/outlier correspondence sets for solver tests
- embeddings: planted embeddings that reproduce ground-truth labels
"""
