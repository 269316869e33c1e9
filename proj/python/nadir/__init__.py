"""Aerial traffic analysis: template-matching detection, Kalman tracking,
homography-based speeds, geofence violations and network analytics."""

from nadir._core import *  # noqa: F401,F403
from nadir._core import __version__  # noqa: F401
