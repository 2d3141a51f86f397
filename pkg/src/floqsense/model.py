"""Domain types and toggling-frame signal algebra.

Conventions used throughout the package:

* hbar = 1; every energy is an angular frequency and the Ising scale J = 1
  sets the unit of time (times are quoted as J*t).
* Spin operators are one half times the Pauli matrices, so the clean
  nearest-neighbour chain is critical at Omega = J/2.
* The pulse train applies a global pi rotation about x every tau = 2*pi/omega_0;
  in the toggling frame the AC signal acquires a square-wave envelope that is
  +1 on the first half-cycle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "DisorderSpec",
    "SpinEnsembleSpec",
    "SignalSpec",
    "DriveSpec",
    "ProtocolSchedule",
    "CriticalExponents",
    "NoiseSpec",
    "DisorderRealization",
    "ISING_1D_NN",
    "DIPOLAR_2D_MEANFIELD",
    "sample_disorder",
    "toggling_signal",
    "square_wave",
    "effective_signal_average",
]


@dataclass(frozen=True)
class DisorderSpec:
    """Widths of the quenched disorder channels.

    Conventions follow the free-fermion study: the transverse-field offsets
    are uniform on [-w_omega/2, +w_omega/2] while the bond offsets are
    uniform on [-w_j, +w_j] (twice the range for the same nominal width).
    Pulse-angle errors delta_theta are uniform on [-w_theta, +w_theta].
    """

    w_omega: float = 0.0
    w_j: float = 0.0
    w_theta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("w_omega", "w_j", "w_theta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class SpinEnsembleSpec:
    """Geometry and couplings of the sensing ensemble.

    ``coupling`` is either the string ``"nn"`` (uniform nearest-neighbour
    chain of strength ``j``) or an explicit symmetric matrix of couplings
    J_ij >= 0.  ``dimension`` enters only the scaling formulas; simulated
    chains are one-dimensional.
    """

    n: int
    j: float = 1.0
    coupling: object = "nn"
    boundary: str = "open"
    dimension: int = 1
    disorder: DisorderSpec = field(default_factory=DisorderSpec)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two spins")
        if self.j < 0:
            raise ValueError("ferromagnetic convention requires j >= 0")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be 'open' or 'periodic'")
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not isinstance(self.coupling, str):
            jm = np.asarray(self.coupling, dtype=float)
            if jm.shape != (self.n, self.n):
                raise ValueError("coupling matrix must be n x n")
            if not np.allclose(jm, jm.T):
                raise ValueError("coupling matrix must be symmetric")
            if np.any(jm < 0):
                raise ValueError("couplings must be non-negative (ferromagnetic)")
            jm = jm.copy()
            jm.flags.writeable = False
            object.__setattr__(self, "coupling", jm)
        elif self.coupling != "nn":
            raise ValueError("coupling must be 'nn' or an explicit matrix")

    @property
    def nearest_neighbour(self) -> bool:
        return isinstance(self.coupling, str)

    def bonds(self):
        """Index pairs of nearest-neighbour bonds (wrap bond only for n > 2)."""
        pairs = [(i, i + 1) for i in range(self.n - 1)]
        if self.boundary == "periodic" and self.n > 2:
            pairs.append((self.n - 1, 0))
        return pairs


@dataclass(frozen=True)
class SignalSpec:
    """AC field to be sensed: b * sin(omega_s * t + phase0) along z."""

    b: float
    omega_s: float
    phase0: float = 0.0

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("signal amplitude must be >= 0")
        if self.omega_s <= 0:
            raise ValueError("signal frequency must be > 0")

    def value(self, t):
        return self.b * np.sin(self.omega_s * t + self.phase0)


@dataclass(frozen=True)
class DriveSpec:
    """Global pi-pulse train about x with period tau = 2*pi/omega_0."""

    omega_0: float
    pulse_axis: str = "x"

    def __post_init__(self):
        if self.omega_0 <= 0:
            raise ValueError("Floquet frequency must be > 0")
        if self.pulse_axis != "x":
            raise ValueError("only x-axis pulses are supported")

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.omega_0


@dataclass(frozen=True)
class ProtocolSchedule:
    """Stage durations, ramp endpoints and per-stage drives.

    omega_init is the transverse field at the start of the ramp (and the end
    of the read-out ramp); omega_stop is the field held during the
    measurement window: 0 for the parity protocol, Omega_c + delta for the
    excitation protocol.  delta_omega is the measurement-stage detuning
    omega_s - omega_0/2 of the no-parity scheme (0 on resonance).
    """

    t_p: float
    t_s: float
    t_r: float
    omega_init: float
    omega_stop: float = 0.0
    ramp_shape: str = "smooth"
    drive_init: DriveSpec = None
    drive_meas: DriveSpec = None
    drive_read: DriveSpec = None
    delta_omega: float = 0.0

    def __post_init__(self):
        if min(self.t_p, self.t_s, self.t_r) < 0:
            raise ValueError("stage durations must be >= 0")
        if self.ramp_shape not in ("linear", "smooth", "gap-paced"):
            raise ValueError("ramp_shape must be 'linear', 'smooth' or 'gap-paced'")
        if self.drive_init is None or self.drive_meas is None:
            raise ValueError("initialization and measurement drives are required")
        if self.drive_read is None:
            object.__setattr__(self, "drive_read", self.drive_init)

    def ramp_value(self, s: float, down: bool = True) -> float:
        """Transverse field at ramp fraction s in [0, 1] (linear and smooth
        shapes; the gap-paced shape needs the system size and is resolved by
        the protocol layer)."""
        if self.ramp_shape == "gap-paced":
            raise ValueError("gap-paced ramps are resolved by the protocol layer")
        s = min(max(s, 0.0), 1.0)
        if self.ramp_shape == "smooth":
            s = 0.5 * (1.0 - math.cos(math.pi * s))
        a, b = (self.omega_init, self.omega_stop) if down else (self.omega_stop, self.omega_init)
        return a + (b - a) * s

    def detuning_check(self, signal: SignalSpec, margin: float = 5.0):
        """Warn-level check |omega_0 - 2 omega_s| >> Omega, J on the init drive.

        Returns list of warning strings (empty when the margin is met).
        """
        problems = []
        for label, drive in (("initialization", self.drive_init), ("readout", self.drive_read)):
            gap = abs(drive.omega_0 - 2.0 * signal.omega_s)
            scale = max(self.omega_init, self.omega_stop, 1.0)
            if gap < margin * scale:
                problems.append(
                    f"{label} drive detuning |omega_0 - 2 omega_s| = {gap:.3g} "
                    f"is not large compared to max(Omega, J) = {scale:.3g}"
                )
        return problems


@dataclass(frozen=True)
class CriticalExponents:
    """Critical exponents entering the scaling laws.

    eta (scaling dimension of S^z) and mu (localization exponent) are only
    known for some universality classes and may be left unset.
    """

    nu: float
    z: float
    eta: float = None
    mu: float = None

    def __post_init__(self):
        if self.nu <= 0 or self.z <= 0:
            raise ValueError("nu and z must be > 0")
        for name in ("eta", "mu"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0 when given")


#: 1D nearest-neighbour transverse-field Ising chain.
ISING_1D_NN = CriticalExponents(nu=1.0, z=1.0, eta=3.0 / 8.0, mu=1.49)

#: 2D dipolar-interacting array, mean-field transition.
DIPOLAR_2D_MEANFIELD = CriticalExponents(nu=1.0, z=0.5)


@dataclass(frozen=True)
class NoiseSpec:
    """External-noise model: S(omega) ~ a0^(1+alpha) / omega^alpha.

    Only t2_single enters the quantitative scaling formulas; a0 and alpha are
    carried for bookkeeping.
    """

    t2_single: float
    a0: float = 1.0
    alpha: float = 1.0
    correlation_model: str = "independent"

    def __post_init__(self):
        if self.t2_single <= 0:
            raise ValueError("t2_single must be > 0")
        if self.correlation_model not in ("independent", "dipolar-correlated"):
            raise ValueError("unknown correlation model")


@dataclass(frozen=True)
class DisorderRealization:
    """One quenched draw: per-site field offsets, absolute bond couplings,
    per-site pulse-angle errors.  Uniform Omega is supplied separately by the
    protocol (it is ramped), so the engine-facing field is
    omega_site(Omega) = Omega + delta_omega.
    """

    spec: SpinEnsembleSpec
    delta_omega: np.ndarray
    j_bonds: np.ndarray
    theta_err: np.ndarray

    def __post_init__(self):
        for name in ("delta_omega", "j_bonds", "theta_err"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.spec.n

    def omega_site(self, omega: float) -> np.ndarray:
        return omega + self.delta_omega


def sample_disorder(spec: SpinEnsembleSpec) -> DisorderRealization:
    """Draw one disorder realization, deterministic in the spec's seed.

    delta_Omega_i ~ U[-w_omega/2, +w_omega/2], delta_J_i ~ U[-w_j, +w_j],
    delta_theta_i ~ U[-w_theta, +w_theta].
    """
    d = spec.disorder
    if d.w_j >= spec.j > 0:
        warnings.warn(
            "bond disorder width >= J: couplings can change sign, breaking "
            "the ferromagnetic assumption",
            stacklevel=2,
        )
    rng = np.random.default_rng(d.seed)
    n_bonds = len(spec.bonds())
    delta_omega = rng.uniform(-0.5 * d.w_omega, 0.5 * d.w_omega, spec.n)
    delta_j = rng.uniform(-d.w_j, d.w_j, n_bonds)
    theta = rng.uniform(-d.w_theta, d.w_theta, spec.n)
    return DisorderRealization(
        spec=spec,
        delta_omega=delta_omega,
        j_bonds=spec.j + delta_j,
        theta_err=theta,
    )


def square_wave(t, drive: DriveSpec):
    """Toggling-frame envelope: +1 on [0, tau), -1 on [tau, 2 tau), periodic."""
    phase = np.floor_divide(np.asarray(t, dtype=float), drive.tau).astype(np.int64)
    return np.where(phase % 2 == 0, 1.0, -1.0)


def toggling_signal(signal: SignalSpec, drive: DriveSpec, t):
    """Effective field b*sin(omega_s t + phase0) * square_wave(t) at time t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    out = signal.value(t) * square_wave(t, drive)
    return float(out) if out.ndim == 0 else out


def _segment_average(signal: SignalSpec, drive: DriveSpec, n_segments: int) -> float:
    """Average of the toggled signal over n_segments pulse intervals.

    The integral over each interval is done in closed form (the integrand is
    a sine between flips), so the only error is the window truncation.
    """
    tau = drive.tau
    n = np.arange(n_segments)
    edges = n * tau
    w = signal.omega_s
    seg = (np.cos(w * edges + signal.phase0) - np.cos(w * (edges + tau) + signal.phase0)) / w
    signs = np.where(n % 2 == 0, 1.0, -1.0)
    return float(signal.b * np.sum(signs * seg) / (n_segments * tau))


def effective_signal_average(
    signal: SignalSpec, drive: DriveSpec, window_segments: int = 200_000
) -> float:
    """Time average B_bar of the toggled signal.

    On resonance (omega_0 = 2 omega_s) the closed form (2/pi) b cos(phase0)
    is returned.  For commensurate frequencies the average is taken exactly
    over the least common period; otherwise over ``window_segments`` pulse
    intervals, with truncation error O(b * tau / window).
    """
    if signal.b == 0.0:
        return 0.0
    if math.isclose(drive.omega_0, 2.0 * signal.omega_s, rel_tol=1e-12):
        return (2.0 / math.pi) * signal.b * math.cos(signal.phase0)
    # toggling envelope has period 2 tau; signal has period 2 pi / omega_s
    ratio = drive.tau * signal.omega_s / math.pi
    frac = Fraction(ratio).limit_denominator(100_000)
    if frac.numerator > 0 and math.isclose(ratio, float(frac), rel_tol=1e-12, abs_tol=1e-15):
        # common period = denominator * (2 tau): exact average
        return _segment_average(signal, drive, 2 * frac.denominator)
    return _segment_average(signal, drive, window_segments)
