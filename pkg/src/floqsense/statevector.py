"""Exact dense simulation of the driven, interacting spin chain.

State vectors live in the sigma-z product basis with site 0 as the least
significant bit (bit 0 means spin up, S^z = +1/2).  Evolution alternates
continuous propagation under the instantaneous Hamiltonian

    H(t) = - sum_b J_b S^z_i S^z_j - sum_i Omega_i(t) S^x_i
           + (b sin(omega_s t + phi0) + eps_z) * sum_i S^z_i

with instantaneous global pi pulses about x every tau = 2 pi / omega_0.
The continuous part uses Strang splitting between the diagonal (Ising +
signal) and transverse terms; the signal integral inside each substep is
done in closed form, and Omega is sampled at substep midpoints.  All
factors are unitary, so norm drift is limited to float roundoff and is
checked against a hard bound after every segment.

Sizes up to N = 14 are supported for vector operations; explicit
2^N x 2^N matrices (build_h0, floquet_operator, even_sector_spectrum)
are restricted to N <= 12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, eigsh

from .model import DisorderRealization, DriveSpec, ProtocolSchedule, SignalSpec, SpinEnsembleSpec

__all__ = [
    "STATE_CAP",
    "DENSE_CAP",
    "QuantumState",
    "EvolutionSegment",
    "RampResult",
    "gap_paced_path",
    "ramp_path",
    "run_adiabatic_ramp",
    "polarized_x",
    "ghz_even",
    "ghz_odd",
    "build_h0",
    "apply_pulse",
    "evolve",
    "parity_expectation",
    "excitation_number",
    "xbasis_flip_distribution",
    "zz_correlator",
    "domain_wall_density",
    "ground_state",
    "even_sector_spectrum",
    "floquet_operator",
]

STATE_CAP = 14
DENSE_CAP = 12

_NORM_TOL = 1e-8


class QuantumState:
    """Complex amplitude vector over the sigma-z product basis."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        amp = np.asarray(amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size & (amp.size - 1):
            raise ValueError("amplitudes must be a vector of length 2^N")
        self.amplitudes = amp

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def fidelity(self, other: "QuantumState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy())


def polarized_x(n: int) -> QuantumState:
    """All spins along +x."""
    _check_n(n)
    return QuantumState(np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def ghz_even(n: int) -> QuantumState:
    """(|up...up> + |down...down>)/sqrt(2), even parity."""
    _check_n(n)
    amp = np.zeros(2**n, dtype=complex)
    amp[0] = amp[-1] = 1.0 / math.sqrt(2.0)
    return QuantumState(amp)


def ghz_odd(n: int) -> QuantumState:
    """(|up...up> - |down...down>)/sqrt(2), odd parity."""
    _check_n(n)
    amp = np.zeros(2**n, dtype=complex)
    amp[0] = 1.0 / math.sqrt(2.0)
    amp[-1] = -1.0 / math.sqrt(2.0)
    return QuantumState(amp)


def _check_n(n: int, cap: int = STATE_CAP):
    if n > cap:
        raise ValueError(f"N = {n} exceeds the cap of {cap} for this operation")


def _bit_values(n: int, i: int) -> np.ndarray:
    """z_i = +1/-1 over the basis (bit 0 -> +1)."""
    bits = (np.arange(2**n) >> i) & 1
    return 1.0 - 2.0 * bits


def _popcount(n: int) -> np.ndarray:
    counts = np.zeros(2**n, dtype=np.int64)
    for i in range(n):
        counts += (np.arange(2**n) >> i) & 1
    return counts


def ising_diagonal(realization: DisorderRealization) -> np.ndarray:
    """Diagonal of -sum_b J_b S^z_i S^z_j (general J_ij supported)."""
    n = realization.n
    _check_n(n)
    diag = np.zeros(2**n)
    spec = realization.spec
    if spec.nearest_neighbour:
        for (i, j), jb in zip(spec.bonds(), realization.j_bonds):
            diag -= jb * 0.25 * _bit_values(n, i) * _bit_values(n, j)
    else:
        jm = spec.coupling
        for i in range(n):
            zi = _bit_values(n, i)
            for j in range(i + 1, n):
                if jm[i, j] != 0.0:
                    diag -= jm[i, j] * 0.25 * zi * _bit_values(n, j)
    return diag


def sz_total_diagonal(n: int) -> np.ndarray:
    """Diagonal of sum_i S^z_i."""
    return 0.5 * n - _popcount(n).astype(float)


def _apply_x_rotations(amp: np.ndarray, n: int, angles) -> np.ndarray:
    """Apply prod_i exp(-i angle_i S^x_i) in place, returning the array."""
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (n,))
    for i in range(n):
        c = math.cos(0.5 * angles[i])
        s = math.sin(0.5 * angles[i])
        if s == 0.0 and c == 1.0:
            continue
        view = amp.reshape(2 ** (n - 1 - i), 2, 2**i)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 - 1j * s * a1
        view[:, 1, :] = c * a1 - 1j * s * a0
    return amp


def _apply_transverse(amp: np.ndarray, n: int, omega_site: np.ndarray) -> np.ndarray:
    """Apply -sum_i Omega_i S^x_i to a vector (for matrix-free eigensolves)."""
    out = np.zeros_like(amp)
    for i in range(n):
        view = amp.reshape(2 ** (n - 1 - i), 2, 2**i)
        dst = out.reshape(2 ** (n - 1 - i), 2, 2**i)
        dst[:, 0, :] -= 0.5 * omega_site[i] * view[:, 1, :]
        dst[:, 1, :] -= 0.5 * omega_site[i] * view[:, 0, :]
    return out


@dataclass
class EvolutionSegment:
    """One stage of continuous evolution.

    ``omega`` is the uniform transverse field: a number or a callable of the
    stage-local time.  The per-site disorder offsets from the realization are
    added on top.  ``signal`` contributes b sin(omega_s t + phi0) sum S^z and
    ``epsilon_z`` a static parity-breaking field along z.  ``max_step`` bounds
    the Strang substep.
    """

    realization: DisorderRealization
    duration: float
    omega: object = 0.0
    signal: SignalSpec = None
    epsilon_z: float = 0.0
    max_step: float = 0.01

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.max_step <= 0:
            raise ValueError("max_step must be > 0")
        _check_n(self.realization.n)
        self._ising = ising_diagonal(self.realization)
        self._sz = sz_total_diagonal(self.realization.n)

    def omega_at(self, t: float) -> float:
        return self.omega(t) if callable(self.omega) else float(self.omega)

    def _signal_integral(self, t0: float, t1: float) -> float:
        if self.signal is None or self.signal.b == 0.0:
            return 0.0
        w, p = self.signal.omega_s, self.signal.phase0
        return self.signal.b * (math.cos(w * t0 + p) - math.cos(w * t1 + p)) / w


def _diag_phase(seg: EvolutionSegment, amp, t0, t1):
    """Exact diagonal propagation over [t0, t1] (Ising + signal + eps_z)."""
    dt = t1 - t0
    phase = seg._ising * dt + seg._sz * (seg._signal_integral(t0, t1) + seg.epsilon_z * dt)
    amp *= np.exp(-1j * phase)
    return amp


def _strang_interval(seg: EvolutionSegment, amp, t0, t1):
    """Second-order split propagation of a pulse-free interval."""
    n = seg.realization.n
    length = t1 - t0
    if length <= 0:
        return amp
    omega_const = not callable(seg.omega)
    if omega_const and seg.omega_at(t0) == 0.0 and np.all(seg.realization.delta_omega == 0.0):
        return _diag_phase(seg, amp, t0, t1)
    steps = max(1, math.ceil(length / seg.max_step))
    dt = length / steps
    for k in range(steps):
        ta = t0 + k * dt
        tm = ta + 0.5 * dt
        tb = ta + dt
        _diag_phase(seg, amp, ta, tm)
        om = seg.realization.omega_site(seg.omega_at(tm))
        _apply_x_rotations(amp, n, -om * dt)
        _diag_phase(seg, amp, tm, tb)
    return amp


def evolve(state: QuantumState, segment: EvolutionSegment, drive: DriveSpec = None) -> QuantumState:
    """Propagate through a segment, interleaving pi pulses when a drive is given.

    Pulses fire every tau of stage-local time; a partial final period is
    propagated without a trailing pulse.  Raises if the norm drifts beyond
    1e-8 (unitary factors make this a roundoff guard, not a tolerance knob).
    """
    amp = state.amplitudes.copy()
    n = segment.realization.n
    if amp.size != 2**n:
        raise ValueError("state size does not match realization")
    T = segment.duration
    if drive is None:
        _strang_interval(segment, amp, 0.0, T)
    else:
        tau = drive.tau
        n_pulses = int(math.floor(T / tau + 1e-9))
        theta = math.pi + segment.realization.theta_err
        t = 0.0
        for k in range(1, n_pulses + 1):
            _strang_interval(segment, amp, t, k * tau)
            _apply_x_rotations(amp, n, theta)
            t = k * tau
        if T - t > 1e-12 * max(T, 1.0):
            _strang_interval(segment, amp, t, T)
    norm = np.linalg.norm(amp)
    if abs(norm - 1.0) > _NORM_TOL:
        raise RuntimeError(f"integrator norm drift {abs(norm - 1.0):.2e} exceeds {_NORM_TOL}")
    return QuantumState(amp)


def apply_pulse(state: QuantumState, theta_err=None) -> QuantumState:
    """Global pi pulse about x with optional per-site angle errors."""
    n = state.n
    err = np.zeros(n) if theta_err is None else np.asarray(theta_err, dtype=float)
    amp = state.amplitudes.copy()
    _apply_x_rotations(amp, n, math.pi + err)
    return QuantumState(amp)


def build_h0(realization: DisorderRealization, omega: float) -> np.ndarray:
    """Dense H0 = -sum J_b S^z S^z - sum Omega_i S^x_i (real symmetric)."""
    n = realization.n
    _check_n(n, DENSE_CAP)
    dim = 2**n
    h = np.diag(ising_diagonal(realization))
    om = realization.omega_site(omega)
    idx = np.arange(dim)
    for i in range(n):
        h[idx, idx ^ (1 << i)] += -0.5 * om[i]
    return h


def parity_expectation(state: QuantumState) -> float:
    """<prod_i (2 S^x_i)>: Hadamard rotation to the x basis, then diagonal sum."""
    amp_x = _to_x_basis(state.amplitudes, state.n)
    signs = 1.0 - 2.0 * (_popcount(state.n) % 2)
    return float(np.real(np.sum(signs * np.abs(amp_x) ** 2)))


def _to_x_basis(amp: np.ndarray, n: int) -> np.ndarray:
    out = amp.copy()
    r = 1.0 / math.sqrt(2.0)
    for i in range(n):
        view = out.reshape(2 ** (n - 1 - i), 2, 2**i)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = r * (a0 + a1)
        view[:, 1, :] = r * (a0 - a1)
    return out


def xbasis_flip_distribution(state: QuantumState) -> np.ndarray:
    """Probabilities q_m of finding m spins flipped away from +x, m = 0..N.

    A projective measurement of every spin along x produces m flips with
    probability q_m; the parity outcome of the same shot is (-1)^m.
    """
    n = state.n
    probs = np.abs(_to_x_basis(state.amplitudes, n)) ** 2
    return np.bincount(_popcount(n), weights=probs, minlength=n + 1)


def excitation_number(state: QuantumState) -> float:
    """N/2 - <sum_i S^x_i>: spin flips relative to the x-polarized paramagnet."""
    q = xbasis_flip_distribution(state)
    return float(np.sum(np.arange(q.size) * q))


def excitation_variance(state: QuantumState) -> float:
    q = xbasis_flip_distribution(state)
    m = np.arange(q.size)
    mean = np.sum(m * q)
    return float(np.sum(m**2 * q) - mean**2)


def zz_correlator(state: QuantumState, i: int, j: int) -> float:
    """Connected <S^z_i S^z_j> - <S^z_i><S^z_j>."""
    n = state.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError("site index out of range")
    probs = np.abs(state.amplitudes) ** 2
    zi = _bit_values(n, i)
    zj = _bit_values(n, j)
    return float(np.sum(probs * zi * zj) * 0.25 - np.sum(probs * zi) * np.sum(probs * zj) * 0.25)


def domain_wall_density(state: QuantumState, realization: DisorderRealization) -> float:
    """Mean of (1/2 - 2 <S^z_i S^z_j>) over bonds: 0 on ferromagnetic states."""
    probs = np.abs(state.amplitudes) ** 2
    n = state.n
    total = 0.0
    bonds = realization.spec.bonds()
    for i, j in bonds:
        total += 0.5 - 2.0 * float(np.sum(probs * _bit_values(n, i) * _bit_values(n, j))) * 0.25
    return total / len(bonds)


def _parity_flip(amp: np.ndarray) -> np.ndarray:
    """Apply prod_i (2 S^x_i): complements every bit, i.e. reverses the basis."""
    return amp[::-1].copy()


def ground_state(realization: DisorderRealization, omega: float):
    """Lowest eigenstate of H0 (matrix-free Lanczos); even-parity member when
    the ground manifold is degenerate (Omega -> 0).

    Returns (state, energy).
    """
    n = realization.n
    _check_n(n)
    diag = ising_diagonal(realization)
    om = realization.omega_site(omega)

    def matvec(v):
        return diag * v + _apply_transverse(v, n, om)

    op = LinearOperator((2**n, 2**n), matvec=matvec, dtype=float)
    vals, vecs = eigsh(op, k=2, which="SA")
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals[1] - vals[0] < 1e-10:
        # degenerate pair: project onto even parity
        cand = vecs[:, 0] + _parity_flip(vecs[:, 0])
        if np.linalg.norm(cand) < 1e-6:
            cand = vecs[:, 1] + _parity_flip(vecs[:, 1])
        vec = cand / np.linalg.norm(cand)
        energy = float(vec @ matvec(vec))
    else:
        vec = vecs[:, 0]
        energy = float(vals[0])
    if vec[np.argmax(np.abs(vec))].real < 0:
        vec = -vec
    return QuantumState(vec.astype(complex)), energy


def even_sector_spectrum(realization: DisorderRealization, omega: float) -> np.ndarray:
    """All eigenvalues of H0 restricted to the even-parity sector.

    Built in the x basis, where parity is diagonal: the transverse term is
    diagonal and each Ising bond flips the two bond sites.
    """
    n = realization.n
    _check_n(n, DENSE_CAP)
    dim = 2**n
    om = realization.omega_site(omega)
    diag = np.zeros(dim)
    for i in range(n):
        diag -= om[i] * 0.5 * _bit_values(n, i)
    even = np.flatnonzero(_popcount(n) % 2 == 0)
    pos = -np.ones(dim, dtype=np.int64)
    pos[even] = np.arange(even.size)
    h = np.diag(diag[even])
    spec = realization.spec
    if not spec.nearest_neighbour:
        raise ValueError("even-sector spectrum supports nearest-neighbour chains only")
    for (i, j), jb in zip(spec.bonds(), realization.j_bonds):
        flipped = even ^ (1 << i) ^ (1 << j)
        h[pos[flipped], np.arange(even.size)] += -0.25 * jb
    return np.sort(eigh(h, eigvals_only=True))


def gap_paced_path(om0: float, om1: float, duration: float, n: int, j: float, ngrid: int = 2001):
    """Monotone Omega(t) pacing dOmega/dt ~ gap^2, using the clean finite-N
    even-sector gap 2*eps_{k=pi/N}(Omega): the ramp time concentrates near
    the critical point instead of in the trivially-gapped regions."""
    k1 = math.pi / n
    oms = np.linspace(om0, om1, ngrid)
    gap = 2.0 * np.sqrt(j**2 / 4.0 + oms**2 - j * oms * math.cos(k1))
    w = 1.0 / gap**2
    steps = np.abs(np.diff(oms))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * steps)])
    t_grid = duration * cum / cum[-1]

    def omega(t):
        return float(np.interp(min(max(t, 0.0), duration), t_grid, oms))

    return omega


def ramp_path(schedule: ProtocolSchedule, spec: SpinEnsembleSpec, duration: float, down: bool = True):
    """Omega(t) callable for one ramp stage of a schedule."""
    if schedule.ramp_shape == "gap-paced":
        a, b = schedule.omega_init, schedule.omega_stop
        if not down:
            a, b = b, a
        return gap_paced_path(a, b, duration, spec.n, spec.j)

    def omega(t):
        return schedule.ramp_value(min(max(t / duration, 0.0), 1.0), down=down)

    return omega


@dataclass(frozen=True)
class RampResult:
    state: QuantumState
    ghz_fidelity: float
    defect_density: float
    warnings: list


def run_adiabatic_ramp(
    realization: DisorderRealization,
    schedule: ProtocolSchedule,
    signal: SignalSpec = None,
    max_step: float = 0.01,
) -> RampResult:
    """Initialization stage: ramp the x-polarized paramagnet from omega_init
    to omega_stop with the (detuned) pulse train active.

    Returns the final state, its overlap with the even GHZ state, the
    residual domain-wall density, and any detuning warnings.
    """
    spec = realization.spec
    warn = schedule.detuning_check(signal) if signal is not None else []
    state = polarized_x(spec.n)
    if schedule.t_p > 0:
        seg = EvolutionSegment(
            realization,
            schedule.t_p,
            omega=ramp_path(schedule, spec, schedule.t_p, down=True),
            signal=signal,
            max_step=max_step,
        )
        state = evolve(state, seg, schedule.drive_init)
    return RampResult(
        state=state,
        ghz_fidelity=state.fidelity(ghz_even(spec.n)),
        defect_density=domain_wall_density(state, realization),
        warnings=warn,
    )


def floquet_operator(
    realization: DisorderRealization,
    omega: float,
    drive: DriveSpec,
    epsilon_z: float = 0.0,
    theta_err=None,
) -> np.ndarray:
    """Dense one-period operator U_F = P exp(-i H tau) for a static Hamiltonian.

    Exact (eigendecomposition), intended for small N where accumulated
    integrator error would mask tiny effects such as echo leakage.
    """
    n = realization.n
    _check_n(n, 10)
    h = build_h0(realization, omega)
    dim = 2**n
    h[np.arange(dim), np.arange(dim)] += epsilon_z * sz_total_diagonal(n)
    w, v = eigh(h)
    u_tau = (v * np.exp(-1j * w * drive.tau)) @ v.conj().T
    err = np.zeros(n) if theta_err is None else np.asarray(theta_err, dtype=float)
    # kron order: site 0 least significant
    full = np.array([[1.0]], dtype=complex)
    for i in range(n - 1, -1, -1):
        a = math.pi + err[i]
        r = np.array(
            [
                [math.cos(a / 2), -1j * math.sin(a / 2)],
                [-1j * math.sin(a / 2), math.cos(a / 2)],
            ],
            dtype=complex,
        )
        full = np.kron(full, r)
    return full @ u_tau
