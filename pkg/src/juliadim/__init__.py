"""Hausdorff dimension of Julia sets of z^2 - 2 + delta near delta = 0 and
the angular law of its directional derivative."""

__version__ = "0.1.0"

from .dynamics import RayParameter, fixed_point, julia_sample  # noqa: E402,F401
from .pressure import dimension, pressure_at  # noqa: E402,F401
from .asymptotics import omega, alpha_zero  # noqa: E402,F401
