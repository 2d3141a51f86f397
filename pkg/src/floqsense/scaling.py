"""Closed-form sensitivity, correlation-length, bandwidth and noise formulas.

Every "~" relation is evaluated with prefactor exactly 1: outputs carry
scaling information (exponents, ratios, crossovers), never absolute
magnitudes in physical units.  The dipole-field and noise-density integrals
are the exception: they are definite integrals with exact constants and SI
mu_0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import mu_0
from scipy.integrate import dblquad, quad

from .model import DIPOLAR_2D_MEANFIELD, ISING_1D_NN, CriticalExponents, NoiseSpec

__all__ = [
    "SensitivityReport",
    "DipoleNoiseGeometry",
    "StageSplit",
    "ImagerPoint",
    "NV_J0",
    "kibble_zurek_xi",
    "optimal_stage_split",
    "sensitivity",
    "self_consistent_chi",
    "effective_t2",
    "bandwidth_product",
    "dipole_effective_field",
    "noise_density_ratio",
    "localization_length",
    "disorder_limited_prep_time",
    "interaction_limited_spacing",
    "imager_budget",
    "sensitivity_report",
]

#: NV-NV dipolar coupling scale J0 (rad/s * m^3): J_dd = J0 / r^3 gives
#: 2*pi*3.3 Hz at r = 250 nm.
NV_J0 = 2.0 * math.pi * 52.0e6 * 1e-27

REGIMES = ("sql", "heisenberg", "correlated", "no-parity")


def kibble_zurek_xi(j: float, t_p: float, exponents: CriticalExponents, system_size: float = None) -> float:
    """Correlation length xi = (J T_p)^(nu / (1 + z nu)) from a finite-rate
    ramp through the critical point; clamped to 1 below J T_p = 1 and to the
    linear system size when given."""
    jt = j * t_p
    if jt < 1.0:
        warnings.warn("J*T_p < 1: correlation length clamped to one lattice unit", stacklevel=2)
        xi = 1.0
    else:
        xi = jt ** (exponents.nu / (1.0 + exponents.z * exponents.nu))
    if system_size is not None:
        xi = min(xi, float(system_size))
    return float(xi)


@dataclass(frozen=True)
class StageSplit:
    beta: float
    t_p: float
    t_s: float


def optimal_stage_split(exponents: CriticalExponents, d: int, t2_eff: float = 1.0) -> StageSplit:
    """Optimal fraction beta = T_p / T2_eff = (1 + 2(nu z + 1)/(d nu))^-1 of
    the coherence budget spent preparing correlations."""
    beta = 1.0 / (1.0 + 2.0 * (exponents.nu * exponents.z + 1.0) / (d * exponents.nu))
    return StageSplit(beta=beta, t_p=beta * t2_eff, t_s=(1.0 - beta) * t2_eff)


def sensitivity(
    regime: str,
    n: float,
    t: float,
    t2_eff: float,
    j: float = 1.0,
    exponents: CriticalExponents = ISING_1D_NN,
    d: int = 1,
    xi: float = None,
    t_s: float = None,
) -> float:
    """Inverse sensitivity delta_B^-1 for the selected regime, prefactor 1.

    sql:         sqrt(N T2 T)
    heisenberg:  N sqrt(T2 T)
    correlated:  sqrt(T / T2) sqrt(xi^d N) T_s when xi and T_s are given,
                 else the optimal-split form sqrt(N T T2) (J T2)^(d nu / 2(1+z nu))
    no-parity:   sqrt(N T T2) (J T2)^(eta / (z nu + 1))
    """
    if min(n, t, t2_eff) <= 0:
        raise ValueError("n, t and t2_eff must be positive")
    if regime == "sql":
        return math.sqrt(n * t2_eff * t)
    if regime == "heisenberg":
        return n * math.sqrt(t2_eff * t)
    if regime == "correlated":
        if xi is not None or t_s is not None:
            if xi is None or t_s is None:
                raise ValueError("correlated regime needs both xi and t_s (or neither)")
            return math.sqrt(t / t2_eff) * math.sqrt(xi**d * n) * t_s
        e = d * exponents.nu / (2.0 * (1.0 + exponents.z * exponents.nu))
        return math.sqrt(n * t * t2_eff) * (j * t2_eff) ** e
    if regime == "no-parity":
        if exponents.eta is None:
            raise ValueError("no-parity regime needs the scaling dimension eta")
        e = exponents.eta / (exponents.z * exponents.nu + 1.0)
        return math.sqrt(n * t * t2_eff) * (j * t2_eff) ** e
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def self_consistent_chi(
    j: float, t2_single: float, exponents: CriticalExponents = DIPOLAR_2D_MEANFIELD, d: int = 2
) -> float:
    """Correlated-cluster size chi = (J T2)^(d nu / (1 + z nu + d nu)).

    The defining fixed point chi = (J T2 / chi)^(d nu/(1+z nu)) is iterated
    (with damping: the plain map diverges when d nu > 1 + z nu) and checked
    against the closed form to 1e-8.
    """
    if j * t2_single <= 1.0:
        raise ValueError("requires J * T2 > 1")
    s = d * exponents.nu / (1.0 + exponents.z * exponents.nu)
    closed = (j * t2_single) ** (s / (1.0 + s))
    # Picard iteration on log(chi): the raw map x <- c - s x oscillates or
    # diverges for s >= 1, so relax it; the error then contracts by 1/2.
    c = s * math.log(j * t2_single)
    lam = 0.5 / (1.0 + s)
    x = 0.0
    for _ in range(200):
        x_new = (1.0 - lam) * x + lam * (c - s * x)
        if abs(x_new - x) < 1e-14:
            x = x_new
            break
        x = x_new
    iterated = math.exp(x)
    if abs(iterated - closed) > 1e-8 * max(closed, 1.0):
        raise RuntimeError("chi fixed point failed to converge to the closed form")
    return closed


def effective_t2(t2_single: float, xi: float, d: int, model: str = "independent") -> float:
    """Coherence time of the correlated state: T2/xi^d for independent noise,
    T2/sqrt(chi) with chi = xi^2 for dipolar-correlated noise (2D geometry)."""
    if t2_single <= 0 or xi <= 0:
        raise ValueError("t2_single and xi must be positive")
    if model == "independent":
        return t2_single / xi**d
    if model == "dipolar-correlated":
        if d != 2:
            raise ValueError("the dipolar-correlated reduction is derived for d = 2 only")
        chi = xi**d
        return t2_single / math.sqrt(chi)
    raise ValueError("model must be 'independent' or 'dipolar-correlated'")


def bandwidth_product(regime: str, n: float, t: float, chi: float = 1.0) -> float:
    """Bandwidth-sensitivity product delta_omega / (delta_B)^2: N T for the
    conventional method, chi N T for the correlated method."""
    if regime == "conventional":
        return n * t
    if regime == "correlated":
        return chi * n * t
    raise ValueError("regime must be 'conventional' or 'correlated'")


@dataclass(frozen=True)
class DipoleNoiseGeometry:
    """Fluctuating dipole below a 2D sensing layer: spacing a0, depth z,
    moment m tilted by alpha from the vertical, n_z fluctuators per depth."""

    a0: float
    depth: float
    m: float = 1.0
    alpha_angle: float = 0.0
    n_z: float = 1.0

    def __post_init__(self):
        if self.a0 <= 0:
            raise ValueError("a0 must be > 0")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    @property
    def m_z(self) -> float:
        return self.m * math.cos(self.alpha_angle)

    @property
    def m_q(self) -> float:
        return self.m * math.sin(self.alpha_angle)


def dipole_effective_field(geom: DipoleNoiseGeometry, xi: float):
    """Collective field of one dipole summed over a correlated patch of
    radius xi: (mu0 / 4 a0^2) xi^2 (z^2 + xi^2)^(-3/2) (2 m_z zhat - m_q qhat).

    Returns (B_z, B_q).
    """
    if xi <= 0:
        raise ValueError("xi must be > 0")
    pref = mu_0 / (4.0 * geom.a0**2) * xi**2 / (geom.depth**2 + xi**2) ** 1.5
    return pref * 2.0 * geom.m_z, -pref * geom.m_q


def dipole_field_quadrature(geom: DipoleNoiseGeometry, xi: float):
    """Independent check of dipole_effective_field: direct 2D quadrature of
    the dipole field over the disk of radius xi (polar coordinates)."""
    z = geom.depth
    mz, mq = geom.m_z, geom.m_q

    def integrand(rho, theta, comp):
        x, y = rho * math.cos(theta), rho * math.sin(theta)
        r2 = x * x + y * y + z * z
        r = math.sqrt(r2)
        m_dot_r = mq * x + mz * z
        rvec = (x, y, z)
        m = (mq, 0.0, mz)
        val = 3.0 * rvec[comp] * m_dot_r / r**5 - m[comp] / r**3
        return val * rho

    out = []
    for comp in (2, 0):  # zhat then qhat
        val, _ = dblquad(
            lambda rho, theta: integrand(rho, theta, comp),
            0.0,
            2.0 * math.pi,
            0.0,
            xi,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        out.append(mu_0 / (4.0 * math.pi * geom.a0**2) * val)
    return out[0], out[1]


def noise_density_ratio(geom: DipoleNoiseGeometry, xi: float, epsrel: float = 1e-10):
    """Depth-integrated spectral densities: uncorrelated over correlated.

    S_corr(z)   ~ (mu0 m / a0^2)^2 xi^4 / (z^2 + xi^2)^3          on z in (0, inf)
    S_uncorr(z) ~ (mu0 m)^2 / a0^2 (1/z^4 - 1/(z^2 + xi^2)^2)     on z in (a0, inf)

    The ratio grows as xi / a0 for xi >> a0.
    """
    a0 = geom.a0
    if xi < a0:
        raise ValueError("requires xi >= a0")
    m2 = (mu_0 * geom.m) ** 2

    def s_corr(z):
        return m2 / a0**4 * xi**4 / (z**2 + xi**2) ** 3

    def s_uncorr(z):
        return m2 / a0**2 * (1.0 / z**4 - 1.0 / (z**2 + xi**2) ** 2)

    corr, _ = quad(s_corr, 0.0, np.inf, epsrel=epsrel, epsabs=0.0)
    uncorr, _ = quad(s_uncorr, a0, np.inf, epsrel=epsrel, epsabs=0.0)
    return (uncorr * geom.n_z) / (corr * geom.n_z)


def localization_length(w_over_j: float, exponents: CriticalExponents = ISING_1D_NN) -> float:
    """xi_loc = (W/J)^(-mu) at the critical point."""
    if w_over_j <= 0:
        raise ValueError("W/J must be > 0")
    if exponents.mu is None:
        raise ValueError("exponents carry no localization exponent mu")
    return w_over_j ** (-exponents.mu)


def disorder_limited_prep_time(w_over_j: float, exponents: CriticalExponents = ISING_1D_NN, j: float = 1.0) -> float:
    """T_p* = (W/J)^(-2 mu) / J: the ramp time beyond which disorder, not
    ramp rate, limits the correlation length (1D chain, nu = z = 1)."""
    if exponents.mu is None:
        raise ValueError("exponents carry no localization exponent mu")
    return w_over_j ** (-2.0 * exponents.mu) / j


def interaction_limited_spacing(j0: float, t2: float) -> float:
    """Sensor spacing at which J_dd T2 = 1: (J0 T2)^(1/3)."""
    return (j0 * t2) ** (1.0 / 3.0)


@dataclass(frozen=True)
class ImagerPoint:
    density: float
    spacing: float
    n_probe: float
    j_dd: float
    chi: float
    db_inv_conventional: float
    db_inv_protocol: float
    regime: str


def imager_budget(
    densities,
    lambda_opt: float = 500e-9,
    t2_single: float = 3e-3,
    j0: float = NV_J0,
    total_time: float = 1.0,
    exponents: CriticalExponents = DIPOLAR_2D_MEANFIELD,
) -> list:
    """Sensitivity budget of a diffraction-limited 2D field imager vs sensor
    density (prefactor-1 scaling curves, regime boundaries approximate).

    Regime I: spacing above the diffraction limit (at most one sensor per
    probe area).  Regime II: diffraction limited, interactions negligible
    (J_dd T2 <= 1); conventional SQL uses every sensor.  Regime III:
    interaction limited; the conventional method caps the usable density at
    spacing (J0 T2)^(1/3) while the driven protocol uses all sensors with the
    correlated-noise gain chi^(1/4).
    """
    probe = 0.5 * lambda_opt
    a_int = interaction_limited_spacing(j0, t2_single)
    out = []
    for rho in np.atleast_1d(np.asarray(densities, dtype=float)):
        if rho <= 0:
            raise ValueError("density must be > 0")
        a = rho**-0.5
        n_probe = (probe / a) ** 2
        j_dd = j0 / a**3
        if a >= probe:
            regime = "I"
            n_conv = 1.0
            n_prot = 1.0
        elif j_dd * t2_single <= 1.0:
            regime = "II"
            n_conv = n_probe
            n_prot = n_probe
        else:
            regime = "III"
            n_conv = (probe / a_int) ** 2
            n_prot = n_probe
        chi = 1.0
        if j_dd * t2_single > 1.0:
            chi = self_consistent_chi(j_dd, t2_single, exponents, d=2)
        db_conv = math.sqrt(n_conv * total_time * t2_single)
        db_prot = math.sqrt(n_prot * total_time * t2_single) * chi**0.25
        out.append(
            ImagerPoint(
                density=float(rho),
                spacing=float(a),
                n_probe=float(n_probe),
                j_dd=float(j_dd),
                chi=float(chi),
                db_inv_conventional=db_conv,
                db_inv_protocol=db_prot,
                regime=regime,
            )
        )
    return out


@dataclass(frozen=True)
class SensitivityReport:
    """Full scaling pipeline output for one operating point."""

    delta_b_inv: float
    regime: str
    beta: float
    t_p: float
    t_s: float
    t_r: float
    xi: float
    chi_cluster: float
    t2_eff: float
    bandwidth: float

    def __post_init__(self):
        if self.delta_b_inv < 0:
            raise ValueError("delta_b_inv must be >= 0")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.xi < 1.0:
            raise ValueError("xi is measured in lattice units and is >= 1")


def sensitivity_report(
    n: float,
    t_total: float,
    noise: NoiseSpec,
    j: float = 1.0,
    exponents: CriticalExponents = ISING_1D_NN,
    d: int = 1,
    regime: str = "correlated",
    w_over_j: float = None,
    system_size: float = None,
) -> SensitivityReport:
    """Compose the scaling laws into one report.

    chi is solved self-consistently from (J, T2); the coherence time of the
    correlated state follows the noise correlation model; the stage budget
    uses the optimal split of T2_eff; disorder (w_over_j) caps xi at the
    localization length and shortens T_p to T_p* when it binds.
    """
    chi = self_consistent_chi(j, noise.t2_single, exponents, d) if j * noise.t2_single > 1 else 1.0
    xi = max(chi ** (1.0 / d), 1.0)
    if w_over_j is not None:
        xi_loc = localization_length(w_over_j, exponents)
        if xi_loc < xi:
            xi = max(xi_loc, 1.0)
            chi = xi**d
    if system_size is not None:
        xi = min(xi, float(system_size))
        chi = xi**d
    if noise.correlation_model == "independent":
        t2_eff = effective_t2(noise.t2_single, xi, d, "independent")
    else:
        t2_eff = effective_t2(noise.t2_single, xi, 2, "dipolar-correlated")
    split = optimal_stage_split(exponents, d, t2_eff)
    t_p = split.t_p
    if w_over_j is not None:
        t_p_star = disorder_limited_prep_time(w_over_j, exponents, j)
        if t_p_star < t_p:
            t_p = t_p_star
    delta_b_inv = sensitivity(regime, n, t_total, t2_eff, j, exponents, d)
    return SensitivityReport(
        delta_b_inv=delta_b_inv,
        regime=regime,
        beta=split.beta,
        t_p=t_p,
        t_s=split.t_s,
        t_r=0.0,
        xi=xi,
        chi_cluster=chi,
        t2_eff=t2_eff,
        bandwidth=1.0 / t2_eff,
    )
