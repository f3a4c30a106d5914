"""Micro frequency hopping modem: patterns, modulation, sync and framing."""

from .errors import (
    BadRoot,
    DataOutOfRange,
    InconsistentPeaks,
    MicroHopError,
    NotDetected,
    NotPrime,
    PayloadTooLarge,
    SizeMismatch,
    SyncFieldInvalid,
    ZeroOrNonInvertible,
)
from .frame import FrameConfig, build_frame, parse_frame, sensitivity_dbm
from .hopping import (
    HoppingPattern,
    Symbol,
    linear_pattern,
    phase_accumulate,
    random_pattern,
    synthesize,
    zc_closed_form,
)
from .sync import Estimate, PilotConfig, estimate_stream

__version__ = "0.1.0"
