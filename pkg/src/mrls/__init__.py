"""Multi-target resonant-beam localization simulator."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DegenerateGridError,
    GeometryError,
    InvalidArgumentError,
    MrlsError,
    UndefinedEfficiencyError,
    UnresolvedSourcesError,
)
from .scenario import Scenario, load_scenario, scenario_from_dict  # noqa: F401
