"""
Room 2: Matching

Correspondences between query primitives and map primitives from the
transformer matcher, from raw embedding similarity, or from ground-truth labels.
"""
from rooms.matching.room import MatchingRoom

__all__ = ["MatchingRoom"]
