"""Exact expectation values for the spin-path Bell state and for product states.

Run: python demos/02_ideal_predictions.py
"""

import numpy as np

from neutron_ks import bell_state, eigenstate, expectation, qm_lhs, tensor_observable
from neutron_ks.algebra import product_state, projection_probability

psi = bell_state()
print("prepared state (spin-major basis up-I, up-II, down-I, down-II):")
print("  ", np.round(psi.amplitudes, 4))

xx, yy = tensor_observable("x", "x"), tensor_observable("y", "y")
xy, yx = tensor_observable("x", "y"), tensor_observable("y", "x")
print(f"<xx> = {expectation(xx, psi):+.3f}   <yy> = {expectation(yy, psi):+.3f}")
print(f"<(xy)(yx)> = {expectation(xy @ yx, psi):+.3f}")

# xy and yx commute, so their joint eigenbasis can be measured in one shot.
# The Bell state lives entirely in the two states where the product is -1.
for family in ("varphi", "phi"):
    for sign in "+-":
        p = projection_probability(eigenstate(family, sign), psi)
        print(f"  |<{family}{sign}|psi>|^2 = {p:.3f}")

print(f"\nreduced LHS for the Bell state: {qm_lhs('reduced_3term', psi):.3f} (classical limit 1)")

# Any product of a spin state and a path state stays below the classical limit.
rng = np.random.default_rng(0)
worst = -np.inf
for _ in range(1000):
    s, p = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    worst = max(worst, qm_lhs("reduced_3term", product_state(s / np.linalg.norm(s), p / np.linalg.norm(p))))
print(f"largest reduced LHS over 1000 random product states: {worst:.4f}")
