"""
Room 3: Pose

Rotation by RANSAC over two-correspondence minimal solutions refined with
weighted Kabsch, then translation and scale by weighted least squares.
"""
from rooms.pose.room import PoseRoom

__all__ = ["PoseRoom"]
