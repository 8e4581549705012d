"""Energy-efficiency planning for multislope Massive MIMO uplink networks."""

__version__ = "0.1.0"

from .pathloss import PathLossModel, pathloss  # noqa: E402
from .power import SystemConfig  # noqa: E402
from .moments import MomentSet, interference_moment, mean_uplink_power  # noqa: E402
from .special import upper_incomplete_gamma  # noqa: E402

__all__ = [
    "MomentSet",
    "PathLossModel",
    "SystemConfig",
    "interference_moment",
    "mean_uplink_power",
    "pathloss",
    "upper_incomplete_gamma",
]
