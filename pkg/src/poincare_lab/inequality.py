"""Exponent bookkeeping and the inequality functionals.

The central quantity is the *ratio*

    ||f - E_w[f]||_{L^r} / (||w||_{L^q}^alpha * ||df||_{L^p}),   alpha = n / ((n-1) p),

which stays bounded over all non-constant ``f`` and all densities ``w`` when
``(n, p, q, r)`` lies in the admissible region checked by
:func:`validate_exponents`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from poincare_lab.calculus import (
    gradient,
    gradient_lp_norm,
    lp_norm,
    quadrature_weights,
    weighted_mean,
)
from poincare_lab.grid import Density, ScalarField, _check_same_grid

INF = math.inf


class HypothesisError(ValueError):
    """An exponent tuple outside the admissible region.

    ``code`` is one of ``p_too_small``, ``q_too_small``, ``r_incompatible``;
    the message names the failed inequality.
    """

    def __init__(self, code: str, inequality: str, detail: str = ""):
        self.code = code
        self.inequality = inequality
        msg = f"{inequality} failed"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class ExponentConfig:
    n: int
    p: float
    q: float
    r: float
    t: float
    alpha: float
    p_prime: float

    def to_dict(self) -> dict:
        return asdict(self)


# closed inequalities admit this relative slack so that boundary values
# produced by float arithmetic (e.g. r = n*p/(n-p)) are not rejected
BOUNDARY_RTOL = Fraction(1, 10**14)


def _exact(x: float) -> Fraction:
    # decimal-exact: 2.4 is read as 12/5, not as its binary neighbour
    return Fraction(repr(float(x)))


def _at_least(a: Fraction, b: Fraction) -> bool:
    return a >= b or b - a <= BOUNDARY_RTOL * abs(b)


def sobolev_conjugate(n: int, p: float) -> float:
    """Target exponent of the Sobolev embedding of W^{1,p} in dimension n.

    ``np/(n-p)`` below the critical exponent, ``inf`` above it, and the
    fixed choice ``2p`` at ``p == n`` where any exponent above ``p`` works.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if p < n:
        return n * p / (n - p)
    if p > n:
        return INF
    return 2.0 * p


def interpolation_theta(t: float, p: float, p_prime: float) -> float:
    """Solve ``1/p = theta/t + (1-theta)/p_prime`` for ``theta`` in (0, 1)."""
    if not t < p < p_prime:
        raise ValueError(f"need t < p < p_prime, got t={t}, p={p}, p_prime={p_prime}")
    inv_pp = 0.0 if math.isinf(p_prime) else 1.0 / p_prime
    return (1.0 / p - inv_pp) / (1.0 / t - inv_pp)


def validate_exponents(n: int, p: float, q: float, r: float) -> ExponentConfig:
    """Check the admissible region and derive ``t``, ``alpha`` and ``p_prime``.

    Requirements: ``p, q`` in (1, inf), ``r`` in (1, inf], ``p >= n/(n-1)``,
    ``q > n/2``, and ``1/r >= 1/p - 1/n`` when ``p < n``.  Comparisons are
    carried out in exact rational arithmetic on the decimal values; the two
    closed inequalities also accept a 1e-14 relative shortfall, which only
    matters for boundary values computed in floating point.

    Raises
    ------
    HypothesisError
        Naming the first violated inequality.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    for name, v in (("p", p), ("q", q)):
        if not (math.isfinite(v) and v > 1):
            code = "p_too_small" if name == "p" else "q_too_small"
            raise HypothesisError(code, f"{name} in (1, inf)", f"{name}={v}")
    if math.isnan(r) or r <= 1:
        raise HypothesisError("r_incompatible", "r in (1, inf]", f"r={r}")

    P, Q = _exact(p), _exact(q)
    if n == 1:
        # n/(n-1) is infinite: no finite p qualifies
        raise HypothesisError("p_too_small", "p >= n/(n-1)", "n=1 admits no finite p")
    if not _at_least(P, Fraction(n, n - 1)):
        raise HypothesisError("p_too_small", "p >= n/(n-1)", f"p={p}, n/(n-1)={n / (n - 1)}")
    if not Q > Fraction(n, 2):
        raise HypothesisError("q_too_small", "q > n/2", f"q={q}, n/2={n / 2}")
    if P < n:
        inv_r = Fraction(0) if math.isinf(r) else 1 / _exact(r)
        if not _at_least(inv_r, 1 / P - Fraction(1, n)):
            raise HypothesisError(
                "r_incompatible", "1/r >= 1/p - 1/n", f"r={r}, p={p}, n={n}"
            )

    return ExponentConfig(
        n=n,
        p=float(p),
        q=float(q),
        r=float(r),
        t=(n - 1) * p / n,
        alpha=n / ((n - 1) * p),
        p_prime=sobolev_conjugate(n, p),
    )


def deficit(f: ScalarField, omega: Density, r: float) -> float:
    """``||f - E_omega[f]||_{L^r}``."""
    _check_same_grid(f.grid, omega.grid)
    return lp_norm(f - weighted_mean(f, omega), r)


def ratio_report(f: ScalarField, omega: Density, cfg: ExponentConfig) -> dict:
    """Deficit, the two denominator norms, and their ratio, as a JSON-ready dict."""
    _check_same_grid(f.grid, omega.grid)
    if f.grid.n != cfg.n:
        raise ValueError(f"config is for n={cfg.n}, grid has n={f.grid.n}")
    grad = gradient_lp_norm(gradient(f), cfg.p)
    if grad == 0.0:
        raise ValueError("constant_f: the gradient norm vanishes")
    d = deficit(f, omega, cfg.r)
    wq = lp_norm(omega, cfg.q)
    return {
        "deficit": d,
        "omega_q_norm": wq,
        "grad_p_norm": grad,
        "alpha": cfg.alpha,
        "ratio": d / (wq**cfg.alpha * grad),
    }


def ratio(f: ScalarField, omega: Density, cfg: ExponentConfig) -> float:
    return ratio_report(f, omega, cfg)["ratio"]


@dataclass(frozen=True)
class Lemma1Report:
    lhs: float
    rhs_core: float
    implied_c: float

    def to_dict(self) -> dict:
        return asdict(self)


def lemma1_check(f: ScalarField, omega: Density, cfg: ExponentConfig) -> Lemma1Report:
    """Measure the constant in the t-norm bound on a box.

    ``lhs = int |f - E_omega[f]|^t`` and
    ``rhs_core = ||omega||_q * (int |df|^p)^(t/p)``; ``implied_c`` is their
    quotient (0 when both vanish).  Only box grids are accepted, the bound
    being a statement about convex domains.
    """
    _check_same_grid(f.grid, omega.grid)
    if any(f.grid.periodic):
        raise ValueError("lemma1_check needs a box grid; periodic axes are not convex domains")
    if f.grid.n != cfg.n:
        raise ValueError(f"config is for n={cfg.n}, grid has n={f.grid.n}")

    w = quadrature_weights(f.grid)
    dev = np.abs(f.values - weighted_mean(f, omega))
    lhs = float(np.sum((w * dev**cfg.t).ravel()))
    grad_p = gradient_lp_norm(gradient(f), cfg.p)
    rhs_core = lp_norm(omega, cfg.q) * grad_p**cfg.t
    if rhs_core > 0:
        implied = lhs / rhs_core
    elif lhs == 0:
        implied = 0.0
    else:
        implied = INF
    return Lemma1Report(lhs=lhs, rhs_core=rhs_core, implied_c=implied)
