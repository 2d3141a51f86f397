"""Sensing without parity read-out: count excitations instead.

The ramp stops just above the critical point; the measurement drive is
detuned so the effective signal oscillates at delta_omega and resonantly
creates quasiparticles when delta_omega hits the gap.  The excitation
number after the reversed ramp is an extensive observable, accessible to
ensemble experiments that cannot resolve single spins.
"""

from floqsense import SignalSpec, SpinEnsembleSpec
from floqsense.protocol import calibrate_detuning, excitation_schedule, run_excitation_protocol

n, omega_s = 8, 20.0
spec = SpinEnsembleSpec(n=n, j=1.0, boundary="periodic")


def sched(sig, delta):
    return excitation_schedule(
        sig, t_p=40.0, t_s=30.0, omega_stop=0.8, delta_omega=delta,
        omega_init=40.0, omega_detuned=400.0,
    )


sig0 = SignalSpec(b=0.0, omega_s=omega_s)
floor = run_excitation_protocol(spec, sched(sig0, 0.3), sig0).excitations
print(f"adiabatic floor (B = 0): N_e = {floor:.2e}\n")

sig = SignalSpec(b=0.01, omega_s=omega_s)
best, resp = calibrate_detuning(spec, sched(sig, 0.3), sig, tol=5e-3)
print(f"calibrated detuning: delta_omega = {best:.3f} (gap above the critical point = 0.30)")
print(f"peak response: N_e = {resp:.4f}\n")

print("response vs signal amplitude at the calibrated detuning:")
print("    B        N_e - floor")
for b in (0.0025, 0.005, 0.01, 0.02):
    s = SignalSpec(b=b, omega_s=omega_s)
    r = run_excitation_protocol(spec, sched(s, best), s)
    print(f"  {b:7.4f}   {r.excitations - floor:.5f}")
print("\nthe response grows as B^2 T_s^2: one resonantly created excitation per")
print("correlated cluster, with probability quadratic in the accumulated phase.")
