"""Shared helpers: errors, logging and seeded random streams.

IO helpers (``data_loader``, ``metrics``) import the feature modules and are
imported by path rather than re-exported here.
"""

from .errors import DomainError, NumericalError, SphereEnergyError
from .logger import get_logger
from .seed import make_rng, seed_everything
