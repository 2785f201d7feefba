"""Kinetic Langevin simulation and Harris-type convergence certificates."""

from hypocert._hypocert import *  # noqa: F401,F403
from hypocert import _hypocert

__version__ = "1.0.0"
__all__ = [name for name in dir(_hypocert) if not name.startswith("_")]
