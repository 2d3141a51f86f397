"""Every closed-form scaling law in one place (prefactor-1 conventions).

Stage budgeting, self-consistent cluster sizes, coherence of correlated
states under independent vs dipolar-correlated noise, bandwidth products,
and the NV field-imager budget.
"""

import math

import numpy as np

from floqsense import DIPOLAR_2D_MEANFIELD, ISING_1D_NN
from floqsense import scaling as sc

print("== optimal stage split beta = T_p / T2_eff ==")
for label, exps, d in (("1D nearest-neighbour", ISING_1D_NN, 1), ("2D dipolar", DIPOLAR_2D_MEANFIELD, 2)):
    print(f"  {label:22s}: beta = {sc.optimal_stage_split(exps, d).beta:.3f}")

print("\n== self-consistent correlated-cluster size ==")
for jt2 in (10.0, 100.0, 1000.0):
    chi = sc.self_consistent_chi(1.0, jt2)
    print(f"  J T2 = {jt2:6.0f}: chi = {chi:7.2f}   (J T2)^(4/7) = {jt2 ** (4 / 7):7.2f}")

print("\n== sensitivity gains over the SQL (J T2 = 100, N = 100, T = 1) ==")
base = sc.sensitivity("sql", 100, 1.0, 100.0)
for regime in ("correlated", "no-parity", "heisenberg"):
    gain = sc.sensitivity(regime, 100, 1.0, 100.0) / base
    print(f"  {regime:12s}: x{gain:7.2f}")

print("\n== coherence of a correlated state (T2 = 1, xi^d = 100) ==")
print(f"  independent noise:        T2_eff = {sc.effective_t2(1.0, 100.0, 1):.4f}")
print(f"  dipolar-correlated (2D):  T2_eff = {sc.effective_t2(1.0, 10.0, 2, 'dipolar-correlated'):.4f}")
print(f"  bandwidth product gain at chi = 100: "
      f"x{sc.bandwidth_product('correlated', 1, 1, 100) / sc.bandwidth_product('conventional', 1, 1):.0f}")

print("\n== dipolar noise is spatially anti-correlated ==")
g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.0)
for xi in (1.0, 10.0, 100.0):
    print(f"  xi/a0 = {xi:5.0f}: uncorrelated/correlated noise ratio = {sc.noise_density_ratio(g, xi):8.2f}")

print("\n== NV field imager at the diffraction limit (probe (250 nm)^2, T2 = 3 ms) ==")
r_min = sc.interaction_limited_spacing(sc.NV_J0, 3e-3)
print(f"  conventional spacing floor: {r_min * 1e9:.0f} nm -> N0 = {(250e-9 / r_min) ** 2:.1f} sensors")
print(f"  dipolar coupling at 250 nm: {sc.NV_J0 / (250e-9) ** 3 / (2 * math.pi):.2f} Hz x 2pi")
for rho in np.geomspace(1e12, 4e16, 5):
    p = sc.imager_budget([rho], t2_single=3e-3)[0]
    print(
        f"  density {rho:9.2e} /m^2: spacing {p.spacing * 1e9:7.1f} nm, regime {p.regime}, "
        f"protocol/conventional = {p.db_inv_protocol / p.db_inv_conventional:6.2f}"
    )
