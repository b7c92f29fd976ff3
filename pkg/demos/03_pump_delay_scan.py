"""
Scanning the pump delay to resolve the two time bins
====================================================

The receiver only reads out a bin correctly when the switch treats it the
way the delayed interferometer expects: the early bin must be converted,
the late bin must pass untouched.  Scanning the pump arrival time therefore
traces out both slots.  The early-slot fidelity shows a plateau while the
pump covers that slot; the late-slot fidelity dips one bin separation
later, when the pump wrongly converts it.  The distance between the two
feature centers measures the bin separation.
"""

import numpy as np

from timebin_qkd.experiment import (
    ExperimentConfig,
    extract_separation,
    plateau_mean,
    run_pump_delay_scan,
)

cfg = ExperimentConfig(seed=5)
delays = np.arange(-4.0, 12.0 + 1e-9, 0.5)
scan = run_pump_delay_scan(cfg, delays, pulses_per_point=50_000)

print("delay      early-slot fidelity        late-slot fidelity")
for d, f0, f1 in zip(scan.delays_ps, scan.fidelity_t0, scan.fidelity_t1):
    b0 = "0" * int(round(f0 * 24))
    b1 = "1" * int(round(f1 * 24))
    print(f"{d:+6.1f} ps  {f0:.3f} {b0:<24}  {f1:.3f} {b1}")

sep = extract_separation(scan)
print()
print(f"extracted bin separation: {sep:.3f} ps (configured {cfg.switch.bin_separation_ps} ps)")
print(f"plateau fidelity around the operating point: {plateau_mean(scan, -1.0, 1.0):.4f}")
