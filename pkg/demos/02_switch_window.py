"""
The cross-phase-modulation switch and its picosecond gate
=========================================================

An intense pump pulse co-propagating with the single-photon signal induces
a polarization rotation via the optical Kerr effect.  Only the time bin
that overlaps the pump gets rotated, so the pump arrival time acts as an
ultrafast gate.  Two ingredients set the gate shape:

* the point efficiency eta = sin^2(2 theta) sin^2(delta_phi / 2), maximal
  when the pump is polarized at 45 degrees and drives a pi phase shift;
* group-velocity walkoff, which slides the pump across the signal and
  turns the point efficiency into a flat-topped window of ~6 ps.
"""

import math

import numpy as np

from timebin_qkd.switch import (
    DEFAULT_PUMP_FWHM_PS,
    DEFAULT_SIGNAL_FWHM_PS,
    DEFAULT_WALKOFF_PS,
    SwitchModel,
    effective_efficiency,
    nonlinear_phase,
    switching_efficiency,
    with_delay,
)

print(f"signal pulse FWHM: {DEFAULT_SIGNAL_FWHM_PS * 1e3:.0f} fs")
print(f"pump pulse FWHM:   {DEFAULT_PUMP_FWHM_PS * 1e3:.0f} fs")
print(f"walkoff window:    {DEFAULT_WALKOFF_PS:.1f} ps")
print()

# a pi phase shift needs a certain pump intensity; invert the phase formula
# for a typical fiber (n2 ~ 3e-20 m^2/W, 1 m effective length)
n2, l_eff, lam = 3.2e-20, 1.0, 720.8e-9
intensity = math.pi / ((8.0 * math.pi / 3.0) * n2 * l_eff / lam)
print(f"peak intensity for a pi shift: {intensity:.3e} W/m^2")
print(f"check: delta_phi = {nonlinear_phase(n2, l_eff, intensity, lam):.6f} rad")
print()

print("point efficiency against the driven phase (theta = pi/4):")
for frac in (0.25, 0.5, 0.75, 1.0):
    eta = switching_efficiency(math.pi / 4, frac * math.pi)
    print(f"  delta_phi = {frac:4.2f} pi  ->  eta = {eta:.4f}")
print()

# the full window: peak efficiency against pump delay.  The plateau spans
# the +/- walkoff/2 range and the edges are set by the pulse durations.
print("gate window (peak efficiency against pump delay):")
model = SwitchModel()
for d in np.arange(-5.0, 5.0 + 1e-9, 0.5):
    eta = effective_efficiency(with_delay(model, float(d)))
    bar = "#" * int(round(eta * 40))
    print(f"  {d:+5.1f} ps  {eta:6.4f}  {bar}")

half = effective_efficiency(with_delay(model, DEFAULT_WALKOFF_PS / 2))
print()
print(f"efficiency exactly one walkoff half-width out: {half:.4f}")
print("(the pump weight is 1/2 there, so the driven phase is pi/2 and the")
print(" efficiency sin^2(pi/4) = 0.5: for a pi peak phase the two coincide)")
