"""Walk through the explicit constant chain for the reaction term
f(u) = e^u - 1 - a*u on the unit square.

Every number printed here is closed-form except mu1, which comes from the
discrete eigensolver, and the primary bifurcation value built from it.
"""

import numpy as np

from neumann_rigidity import (
    ModelParams,
    assemble,
    bifurcation_epsilon,
    build_rectangle_mesh,
    constant_chain,
    eval_f,
    eval_f_prime,
    find_xi,
    first_eigenpair,
    rigidity_threshold,
)

a = 2.0
print(f"reaction coefficient a = {a}")
print(f"f(0)       = {eval_f(0.0, a):+.6f}   (trivial steady state)")
xi = find_xi(a)
print(f"xi_a       = {xi:.10f}   (second constant steady state, f(xi_a) = {eval_f(xi, a):.1e})")
print(f"f'(0)      = {eval_f_prime(0.0, a):+.6f}   (stable direction)")
print(f"f'(xi_a)   = {eval_f_prime(xi, a):+.6f}   (unstable without diffusion)")

op = assemble(build_rectangle_mesh(32, 32, 1.0, 1.0))
chain = constant_chain(ModelParams(a=a, epsilon=1.0, q=4.0), op.area, op.diameter)
print(f"\ndomain: unit square, area = {op.area:.6f}, diameter = {op.diameter:.6f}")
print(f"C0 = a log a - a + 1          = {chain.c0:.10f}")
print(f"C1 = 2 C0 |O|                 = {chain.c1:.10f}   (L1 bound on f(u))")
print(f"eps0(q=4) = q C1 / pi         = {chain.eps0_of_q:.10f}   (integrability threshold)")
print(f"2 pi D^2                      = {chain.c2_bound:.6f}   (kernel integral bound)")

pair = first_eigenpair(op)
print(f"\nmu1 (discrete, 32x32)         = {pair.mu1:.8f}   (pi^2 = {np.pi**2:.8f})")
print(f"eps* = f'(xi_a)/mu1           = {bifurcation_epsilon(a, pair.mu1):.8f}")
print("\nsufficient rigidity thresholds K(M)/mu1 for sample sup bounds M:")
for m_sup in (1.5, 2.0, 3.0):
    print(f"  M = {m_sup}:  K = {chain.lipschitz_k(m_sup):9.4f}  "
          f"threshold = {rigidity_threshold(m_sup, a, pair.mu1):.4f}")
print("\nthe detected pattern onset (about eps*) sits well below every K(M)/mu1,")
print("as it must: the energy bound is sufficient for rigidity, not sharp.")
