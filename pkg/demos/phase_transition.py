#!/usr/bin/env python3
"""Scan d_q over a grid of q and flag the kink where it crosses 1.

For two copies of diag(0.7, 0.2) with weights (0.8, 0.2) the dimension
formula changes branch when d_q passes the ambient-axis value 1; the
scan picks that q out of the secant slopes.
"""

import numpy as np
from scipy.optimize import brentq

import affdims as ad

ifs = ad.AffineIFS(maps=(np.diag([0.7, 0.2]), np.diag([0.7, 0.2])))
model = ad.BernoulliModel(probs=(0.8, 0.2))

grid = np.arange(1.5, 4.0 + 1e-9, 0.05)
scan = ad.phase_transition_scan(ifs, model, grid, tol=5e-5)

q_star = brentq(lambda q: (0.8**q + 0.2**q) ** (1 / (q - 1)) - 0.7, 1.5, 4.0)
print(f"analytic crossing of d_q = 1 at q* = {q_star:.4f}")
print(f"scan threshold on slope jumps: {scan.threshold:.2e}")
print(f"flagged kinks: {[round(k, 3) for k in scan.kink_qs]}")
print()

for q, d in zip(scan.qs, scan.values):
    mark = "  <-- kink" if any(abs(q - k) < 1e-9 for k in scan.kink_qs) else ""
    if abs(q * 20 - round(q * 20)) < 1e-9 and round(q * 20) % 4 == 0 or mark:
        print(f"  q = {q:5.2f}   d_q = {d:.5f}{mark}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.plot(scan.qs, scan.values, ".-")
    for k in scan.kink_qs:
        plt.axvline(k, color="red", alpha=0.5)
    plt.axvline(q_star, color="green", linestyle=":", label="analytic")
    plt.xlabel("q")
    plt.ylabel("d_q")
    plt.legend()
    plt.savefig("phase_transition.png", dpi=130)
    print("\nwrote phase_transition.png")
except ImportError:
    pass
