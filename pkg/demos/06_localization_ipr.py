"""Disorder localizes the quasiparticles that carry spin correlations.

At the critical point, the inverse participation ratio of the modes nearest
zero energy measures the inverse localization length; its growth with the
disorder strength W follows a power law.  (The full-scale study, N = 1000
with 50 x 50 averaging, runs in the acceptance suite and via
configs/ipr_supplement.toml; this demo uses a lighter grid.)
"""

import numpy as np

from floqsense import DisorderSpec, SpinEnsembleSpec
from floqsense.freefermion import fit_power_law, ipr_average

n, n_real = 400, 12
print(f"N = {n}, {n_real} realizations x 50 modes, critical point Omega = J/2\n")
print("   W/J      mean IPR")
ws = np.geomspace(0.05, 0.5, 7)
vals = []
for i, w in enumerate(ws):
    spec = SpinEnsembleSpec(
        n=n,
        j=1.0,
        boundary="periodic",
        disorder=DisorderSpec(w_omega=float(w), w_j=float(w), seed=100 + i),
    )
    vals.append(ipr_average(spec, n_realizations=n_real, jobs=2))
    print(f"  {w:6.3f}   {vals[-1]:.5f}")

fit = fit_power_law(ws, vals)
print(f"\nfitted exponent mu: {fit.exponent:.3f} +/- {fit.stderr:.3f}")
print("localization caps the usable correlation length: past xi_loc = (W/J)^-mu")
print("a longer preparation ramp buys nothing and the time is better spent measuring.")
