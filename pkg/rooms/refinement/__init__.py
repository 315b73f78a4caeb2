"""
Room 4: Refinement

Aligns offset-seeded query primitive depth with the map depth rendered at the
coarse pose, optimizing a left-perturbation twist and per-primitive log seeds.
"""
from rooms.refinement.room import RefinementRoom

__all__ = ["RefinementRoom"]
