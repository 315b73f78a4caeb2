"""
Room 1: Extraction

Sequential RANSAC over the back-projected query depth map. Each round keeps the
plane with the largest consensus (point distance and normal agreement), removes
its inliers, and stops at the primitive cap or when consensus falls below the
minimum pixel fraction.
"""
from rooms.extraction.room import ExtractionRoom, extract_query_primitives

__all__ = ["ExtractionRoom", "extract_query_primitives"]
