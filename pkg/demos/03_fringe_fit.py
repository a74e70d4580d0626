"""Simulate one phase-shifter scan with Poisson noise and fit the fringe.

Run: python demos/03_fringe_fit.py
"""

import math

import numpy as np

from neutron_ks import InstrumentConfig, fit_fringe, simulate_scans, standard_scans

config = InstrumentConfig()
scan = standard_scans()[0]  # spin analysed along +x, path phase swept
records = simulate_scans(config, seed=7, scans=(scan,))

fit = fit_fringe(records)
sigma = np.sqrt(np.diag(fit.covariance))
print(f"scan: {scan.id}, alpha = {scan.alpha:.3f} rad, {len(records)} points")
print(f"  offset A    = {fit.offset_A:9.1f} +- {sigma[0]:.1f}")
print(f"  amplitude B = {fit.amplitude_B:9.1f} +- {sigma[1]:.1f}")
print(f"  phase phi   = {fit.phase_phi:9.4f} +- {sigma[2]:.4f} rad")
print(f"  contrast B/A = {fit.contrast:.4f} (configured visibility {config.visibility_xx})")
print(f"  chi^2 / dof = {fit.chi_squared:.1f} / {fit.dof}")

# A crude text plot: measured counts against the fitted curve.
top = max(r.counts for r in records)
for r in records:
    bar = int(40 * r.counts / top)
    mark = int(40 * fit.curve(r.chi) / top)
    line = ["#"] * bar + [" "] * (41 - bar)
    line[min(mark, 40)] = "|"
    print(f"chi={r.chi:5.2f} {''.join(line)} {r.counts:6.0f}")

print(f"\nfitted count at chi=0 {fit.curve(0.0):.1f}, at chi=pi {fit.curve(math.pi):.1f}")
