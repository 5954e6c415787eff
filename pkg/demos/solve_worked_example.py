#!/usr/bin/env python3
"""Solve for theoretical q-dimensions of a system with a closed form.

Two copies of diag(0.5, 0.3) weighted (0.7, 0.3) admit hand-computable
answers, which makes this the right first stop: d_2 = ln 0.58 / ln 0.5
and d_3 = ln(0.7^3 + 0.3^3) / (2 ln 0.5).
"""

import numpy as np

import affdims as ad

ifs = ad.AffineIFS(maps=(np.diag([0.5, 0.3]), np.diag([0.5, 0.3])))
model = ad.BernoulliModel(probs=(0.7, 0.3))

print("system: two copies of diag(0.5, 0.3), weights (0.7, 0.3)")
print()
print("   q      d_q     closed form")
closed = {
    2.0: np.log(0.58) / np.log(0.5),
    3.0: np.log(0.7**3 + 0.3**3) / (2 * np.log(0.5)),
}
for q in (1.5, 2.0, 2.5, 3.0, 4.0, 6.0):
    res = ad.d_q_minus(ifs, model, q)
    note = f"{closed[q]:.6f}" if q in closed else ""
    print(f"  {q:4.1f}  {res.value:.6f}   {note}")

aff = ad.affinity_dimension(ifs)
print()
print(f"affinity dimension (q = 0 moment sums): {aff.value:.6f}")
print(f"solver brackets the root to {aff.bracket[1] - aff.bracket[0]:.1e} "
      f"in {aff.iterations} bisection steps")

# The growth rate of the moment sums is what the solver drives to 1.
d2 = closed[2.0]
for s in (d2 - 0.05, d2, d2 + 0.05):
    g = ad.growth_rate(ifs, model, s, 2.0)
    print(f"growth rate at s = {s:.4f}: {g:.4f}")
