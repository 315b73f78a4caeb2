"""
Extraction Room Tools.

- point_cloud: depth back-projection with per-pixel normals
- sequential_ransac: iterative plane extraction on organized clouds and point sets
"""

from rooms.extraction.tools.point_cloud import OrganizedCloud, unproject_depth
from rooms.extraction.tools.sequential_ransac import sequential_ransac_depth, sequential_ransac_points

__all__ = [
    "OrganizedCloud",
    "unproject_depth",
    "sequential_ransac_depth",
    "sequential_ransac_points",
]
