"""Error exponents, capacity regions and simulation for the two-sender
asynchronous discrete memoryless multiple-access channel."""

from .errors import (AmacError, CapacityError, ConvergenceError, DimensionError, DomainError,
                     InfeasibleError, RefusalError, SolverError, UsageError)
from .probability import INF, ChannelMatrix, Dist, Joint2, Joint3

__version__ = "0.1.0"
