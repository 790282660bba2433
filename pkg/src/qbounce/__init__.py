"""Simulation of a matter wave bouncing once on a mirror and falling to a plate,
with likelihood and Fisher-information tools for estimating ``g``."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AiryRangeError,
    CapacityError,
    ConfigParseError,
    ConfigurationError,
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    LeakageError,
    QBounceError,
    StepSizeError,
    WindowError,
)
from .physics import (  # noqa: E402
    CONSTANTS,
    PhysicalConstants,
    SpectralDecomposition,
    UnitSet,
    WavePacketParams,
    coefficients_cn,
    gqs_units,
    initial_wavepacket,
    truncation_order,
)
from .grid import Grid, WaveField, extend_for_freefall, first_phase_grid, nyquist_spacing  # noqa: E402
from .model import BounceModel  # noqa: E402
