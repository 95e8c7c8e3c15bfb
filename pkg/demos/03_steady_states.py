"""Find steady states with the damped Newton solver and inspect the check
report attached to each converged solution.

Three runs: two constant basins in the rigid regime, then a pattern below
the primary bifurcation value.
"""

import numpy as np

from neumann_rigidity import (
    NewtonOpts,
    assemble,
    bifurcation_epsilon,
    build_rectangle_mesh,
    find_xi,
    first_eigenpair,
    multi_start,
    newton_solve,
)
from neumann_rigidity.newton import Constant, sup_fluct_of

a = 2.0
op = assemble(build_rectangle_mesh(32, 32, 1.0, 1.0))
pair = first_eigenpair(op)
opts = NewtonOpts(mu1=pair.mu1)
xi = find_xi(a)
eps_star = bifurcation_epsilon(a, pair.mu1)


def show(rec, label):
    d = rec.diagnostics
    kind = ("constant %.6f" % rec.classification.value
            if isinstance(rec.classification, Constant)
            else "pattern, sup fluctuation %.4f" % rec.classification.sup_fluct)
    print(f"\n{label}: {kind} after {rec.newton_iters} iterations "
          f"(residual {rec.residual_norm:.1e})")
    print(f"  zero average  |sum m f(u)| = {d.zero_avg_residual:.2e}")
    print(f"  L1 mass of f  {d.l1_norm_f:.6f} <= bound {d.l1_bound:.6f}")
    print(f"  mean          {d.mean_u:.6f} in [0, xi] = [0, {xi:.6f}]: {d.mean_in_bounds}")
    print(f"  energy        lhs {d.energy_lhs:.3e} vs rhs {d.energy_rhs:.3e}")
    print(f"  representation error {d.representation_error:.2e}")
    print(f"  exp integral  {d.exp_integral_q:.6f} (area {op.area:.1f})")


rec = newton_solve(np.full(op.n, 0.9 * xi), 1.0, a, op, opts)
show(rec, "eps = 1.0, start 0.9*xi")

rec = newton_solve(np.full(op.n, -0.5), 1.0, a, op, opts)
show(rec, "eps = 1.0, start -0.5")

eps = 0.9 * eps_star
x = op.mesh.nodes[:, 0]
rec = newton_solve(xi + 0.5 * np.cos(np.pi * x), eps, a, op, opts)
show(rec, f"eps = 0.9*eps* = {eps:.4f}, start xi + 0.5 cos(pi x)")

print(f"\nmulti-start census at eps = {eps:.4f} (30 starts):")
result = multi_start(eps, a, op, 30, seed=0, opts=opts)
for r in result.distinct:
    print(f"  {('constant %.6f' % r.classification.value) if isinstance(r.classification, Constant) else ('pattern sup %.4f' % sup_fluct_of(r))}")
n_failed = sum(1 for r in result.runs if not r.converged)
print(f"  ({n_failed} of {len(result.runs)} starts failed to converge; "
      "rough noise starts often do below the bifurcation)")
