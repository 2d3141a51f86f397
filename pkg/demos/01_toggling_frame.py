"""The pulse train turns an AC signal into a quasi-static effective field.

A global pi pulse every tau flips the sign of the z field in the rotating
(toggling) frame.  On resonance (omega_0 = 2 omega_s) the flips lock onto
the signal zeros and rectify it to a nonzero average 2B/pi; off resonance
the average dies off.
"""

import numpy as np

from floqsense import DriveSpec, SignalSpec, effective_signal_average, toggling_signal

b, omega_s = 1.0, 10.0
signal = SignalSpec(b=b, omega_s=omega_s)

print("time trace on resonance (sign flips once per Floquet period):")
drive = DriveSpec(omega_0=2 * omega_s)
for t in np.linspace(0.0, 2 * drive.tau, 9):
    print(f"  t = {t:6.3f}   B_eff = {toggling_signal(signal, drive, t):+.4f}")

print("\naverage vs drive frequency (resonance at omega_0 = 2 omega_s = 20):")
for ratio in (2.0, 2.5, 4.0, 10.0, 20.0):
    drive = DriveSpec(omega_0=ratio * omega_s)
    avg = effective_signal_average(signal, drive)
    print(f"  omega_0 = {ratio:4.1f} omega_s   B_bar = {avg:+.6f}")
print(f"\n  2 B / pi = {2 * b / np.pi:.6f}")

print("\nphase matters: a cosine signal (phase0 = pi/2) averages to zero:")
cos_sig = SignalSpec(b=b, omega_s=omega_s, phase0=np.pi / 2)
print(f"  B_bar = {effective_signal_average(cos_sig, DriveSpec(omega_0=2 * omega_s)):+.2e}")
