"""Estimate the Neumann Green-kernel constants numerically.

For sampled source nodes the discrete Green columns are computed with the
projected solver; outside the unresolved logarithmic core their size is
compared against log(D/dist)/pi, giving an empirical bound on the regular
part, and the kernel integral of D/dist is compared with 2*pi*D^2.
"""

import numpy as np

from neumann_rigidity import (
    assemble,
    build_disk_mesh,
    build_rectangle_mesh,
    estimate_green_constants,
)
from neumann_rigidity.diagnostics import cq_numerical_estimate

print(f"{'domain':<22}{'k_green':>9}{'c2_est':>9}{'2piD^2':>9}{'C_q est':>10}")
for name, mesh in (
    ("unit square 32x32", build_rectangle_mesh(32, 32, 1.0, 1.0)),
    ("unit square 64x64", build_rectangle_mesh(64, 64, 1.0, 1.0)),
    ("unit disk ref 5", build_disk_mesh(5, 1.0)),
):
    op = assemble(mesh)
    k_green, c2 = estimate_green_constants(op, sample_count=8, seed=3)
    bound = 2.0 * np.pi * op.diameter**2
    cq = cq_numerical_estimate(k_green, c2)
    print(f"{name:<22}{k_green:>9.4f}{c2:>9.4f}{bound:>9.4f}{cq:>10.4f}")

print("\nk_green is stable between the two square resolutions (the regular")
print("part of the kernel is bounded), c2_est sits well below 2*pi*D^2, and")
print("C_q = c2*exp(pi*k_green) is a numerical estimate, not a certified")
print("constant: it bounds the exponential integral of the fluctuation in")
print("the large-diffusion regime.")
