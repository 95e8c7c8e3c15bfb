"""Scalar reaction model f(t) = e^t - 1 - a*t and its explicit constant chain.

Everything in here is closed-form scalar math: the nonlinearity, its
derivative, the positive root ``xi_a`` separating the two constant steady
states, and the chain of constants (C0, C1, eps0(q), the Green-kernel bound
2*pi*D**2, the Lipschitz bound K(M)) that control when diffusion wipes out
spatial structure.  All functions are pure and stateless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergenceError

# Exponent magnitude beyond which exp() is saturated in field evaluations.
SATURATION_EXPONENT = 700.0


@dataclass(frozen=True)
class ModelParams:
    """Scalar data of the problem: reaction coefficient, diffusion, exponent.

    ``a`` must exceed 1 (two constant states), ``epsilon`` must be positive,
    and the integrability exponent ``q`` must exceed 2.
    """

    a: float
    epsilon: float
    q: float = 4.0

    def __post_init__(self):
        if not self.a > 1.0:
            raise ValueError("a must exceed 1")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not self.q > 2.0:
            raise ValueError("q must exceed 2")


def eval_f(t: float, a: float) -> float:
    """Reaction term e^t - 1 - a*t (saturates to +inf for huge t)."""
    with np.errstate(over="ignore"):
        return float(np.exp(np.float64(t)) - 1.0 - a * t)


def eval_f_prime(t: float, a: float) -> float:
    """Derivative e^t - a of the reaction term."""
    with np.errstate(over="ignore"):
        return float(np.exp(np.float64(t)) - a)


def eval_f_clipped(t: np.ndarray, a: float) -> tuple[np.ndarray, bool]:
    """Vectorized reaction term with the exponent clipped at +700.

    Returns the values and a saturation flag; callers (the Newton line
    search) treat a flagged evaluation as a rejected trial state rather
    than letting infinities contaminate residual norms.
    """
    t = np.asarray(t, dtype=float)
    saturated = bool(np.any(t > SATURATION_EXPONENT))
    return np.exp(np.minimum(t, SATURATION_EXPONENT)) - 1.0 - a * t, saturated


def eval_f_prime_clipped(t: np.ndarray, a: float) -> tuple[np.ndarray, bool]:
    """Vectorized derivative with the same saturation policy as eval_f_clipped."""
    t = np.asarray(t, dtype=float)
    saturated = bool(np.any(t > SATURATION_EXPONENT))
    return np.exp(np.minimum(t, SATURATION_EXPONENT)) - a, saturated


def find_xi(a: float, tol: float = 1e-12) -> float:
    """Unique positive root of e^t - 1 - a*t = 0.

    Bisection on a bracket right of log(a) (where f is negative and then
    convex increasing), followed by Newton polishing.  Deterministic.
    """
    if not a > 1.0:
        raise ValueError("a must exceed 1: no positive root otherwise")
    if not tol > 0.0:
        raise ValueError("tol must be positive")

    lo = np.log(a)
    hi = lo + max(2.0, 4.0 * a)
    # f(lo) = a - 1 - a log a < 0 for a > 1; widen until the sign flips.
    while eval_f(hi, a) <= 0.0:
        hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eval_f(mid, a) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    root = 0.5 * (lo + hi)
    for _ in range(8):
        fr = eval_f(root, a)
        if abs(fr) <= tol:
            break
        root -= fr / eval_f_prime(root, a)
    if abs(eval_f(root, a)) > tol and abs(eval_f(root, a)) > 1e-9 * (1.0 + abs(root)):
        raise NoConvergenceError(f"root polish stalled for a={a}")
    return float(root)


def lipschitz_bound(m_sup: float, a: float) -> float:
    """Bound max{e^M - a, a - e^-M} on |f'| over [-M, M]."""
    return max(np.exp(m_sup) - a, a - np.exp(-m_sup))


def rigidity_threshold(m_sup: float, a: float, mu1: float) -> float:
    """Diffusion level K(M)/mu1 above which fluctuations cannot persist."""
    if not mu1 > 0.0:
        raise ValueError("mu1 must be positive")
    return lipschitz_bound(m_sup, a) / mu1


def bifurcation_epsilon(a: float, mu_k: float) -> float:
    """Diffusion value f'(xi_a)/mu_k at which the k-th mode of the
    linearization about u = xi_a becomes neutral."""
    if not mu_k > 0.0:
        raise ValueError("mu_k must be positive")
    return eval_f_prime(find_xi(a), a) / mu_k


@dataclass(frozen=True)
class ConstantChain:
    """Every explicit constant in the chain from the domain data (area,
    diameter) and model parameters to the rigidity threshold.

    ``k_green`` is optional: it is an empirical bound on the regular part of
    the Neumann Green kernel, filled in by the diagnostics module; no closed
    form exists.
    """

    a: float
    q: float
    area: float
    diameter: float
    xi_a: float
    c0: float
    c1: float
    eps0_of_q: float
    c2_bound: float
    k_green: float | None = field(default=None)

    def lipschitz_k(self, m_sup: float) -> float:
        return lipschitz_bound(m_sup, self.a)

    def threshold_of_m(self, m_sup: float, mu1: float) -> float:
        return rigidity_threshold(m_sup, self.a, mu1)


def constant_chain(params: ModelParams, area: float, diameter: float) -> ConstantChain:
    """Evaluate the closed-form constant chain for a domain of the given
    area and diameter.

    c0 = a*log(a) - a + 1 is minus the global minimum of f, c1 = 2*c0*area
    bounds the L1 mass of f(u) over exact steady states, eps0 = q*c1/pi is
    the diffusion level above which e^(q|u - mean|) is uniformly integrable,
    and 2*pi*D**2 bounds the kernel integral sup_y of D/|x-y|.
    """
    if not area > 0.0:
        raise ValueError("area must be positive")
    if not diameter > 0.0:
        raise ValueError("diameter must be positive")
    a, q = params.a, params.q
    xi_a = find_xi(a)
    c0 = a * np.log(a) - a + 1.0
    c1 = 2.0 * c0 * area
    return ConstantChain(
        a=a,
        q=q,
        area=area,
        diameter=diameter,
        xi_a=xi_a,
        c0=float(c0),
        c1=float(c1),
        eps0_of_q=float(q * c1 / np.pi),
        c2_bound=float(2.0 * np.pi * diameter**2),
    )
