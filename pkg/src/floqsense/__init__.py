"""Floquet-driven Ising sensing laboratory.

Simulates the three-stage AC-magnetometry protocol on driven Ising spin
ensembles (exact state vectors up to N = 14), solves the equivalent
free-fermion problem at large N for localization and ramp diagnostics, and
evaluates the closed-form sensitivity scaling laws.
"""

from .model import (
    DIPOLAR_2D_MEANFIELD,
    ISING_1D_NN,
    CriticalExponents,
    DisorderRealization,
    DisorderSpec,
    DriveSpec,
    NoiseSpec,
    ProtocolSchedule,
    SignalSpec,
    SpinEnsembleSpec,
    effective_signal_average,
    sample_disorder,
    toggling_signal,
)

__version__ = "0.1.0"

from . import freefermion, protocol, scaling, statevector  # noqa: E402

__all__ = [
    "CriticalExponents",
    "DisorderRealization",
    "DisorderSpec",
    "DriveSpec",
    "NoiseSpec",
    "ProtocolSchedule",
    "SignalSpec",
    "SpinEnsembleSpec",
    "ISING_1D_NN",
    "DIPOLAR_2D_MEANFIELD",
    "effective_signal_average",
    "sample_disorder",
    "toggling_signal",
    "freefermion",
    "protocol",
    "scaling",
    "statevector",
    "__version__",
]
