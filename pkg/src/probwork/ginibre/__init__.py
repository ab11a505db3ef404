"""Complex Ginibre ensemble: moments, correlation and overlap densities."""

from .moments import *  # noqa: F401,F403
from .densities import *  # noqa: F401,F403
from .overlaps import *  # noqa: F401,F403
from .asymptotics import *  # noqa: F401,F403
from . import moments, densities, overlaps, asymptotics

__all__ = moments.__all__ + densities.__all__ + overlaps.__all__ + asymptotics.__all__
