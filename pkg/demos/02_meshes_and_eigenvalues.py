"""Build the three domain types, assemble the no-flux operator, and compare
the first nonzero eigenvalue against the closed-form values."""

import numpy as np

from neumann_rigidity import (
    assemble,
    build_disk_mesh,
    build_rectangle_mesh,
    first_eigenpair,
)

J11P = 1.8411837813406593  # first zero of J1'

cases = [
    ("unit square 16x16", build_rectangle_mesh(16, 16, 1.0, 1.0), np.pi**2),
    ("unit square 32x32", build_rectangle_mesh(32, 32, 1.0, 1.0), np.pi**2),
    ("unit square 64x64", build_rectangle_mesh(64, 64, 1.0, 1.0), np.pi**2),
    ("rectangle 2x1 (64x32)", build_rectangle_mesh(64, 32, 2.0, 1.0), (np.pi / 2) ** 2),
    ("disk refinement 4", build_disk_mesh(4, 1.0), J11P**2),
    ("disk refinement 6", build_disk_mesh(6, 1.0), J11P**2),
]

print(f"{'domain':<24}{'nodes':>7}{'area':>10}{'diam':>8}"
      f"{'mu1':>11}{'exact':>11}{'rel err':>10}  degenerate")
for name, mesh, exact in cases:
    op = assemble(mesh)
    pair = first_eigenpair(op)
    rel = abs(pair.mu1 - exact) / exact
    print(f"{name:<24}{op.n:>7}{op.area:>10.5f}{op.diameter:>8.4f}"
          f"{pair.mu1:>11.5f}{exact:>11.5f}{rel:>10.2e}  {pair.degenerate}")

print("\nnotes: the square meshes split all diagonals the same way, which")
print("separates the doubly degenerate first mode by O(h^2); the hexagonal")
print("disk meshes keep their rotation symmetry, so the pair stays exactly")
print("degenerate and is flagged.  Halving h divides the error by about 4.")
