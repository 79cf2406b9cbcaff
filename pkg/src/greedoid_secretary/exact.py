"""Closed forms and exact finite sums for the stopping problems.

Factorials are exact integers; floating sums use :func:`math.fsum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError

EULER_GAMMA = float(np.euler_gamma)

T0_VARIANTS = ("table", "stated")


def perm_count(j: int, n: int) -> int:
    """Permutations ``p`` of ``[n]`` with ``p(k) > p(j)`` for every ``k > j``.

    Equals ``n! / (n - j + 1)``.
    """
    if not 1 <= j <= n:
        raise DomainError(f"need 1 <= j <= n, got j={j}, n={n}")
    count, rem = divmod(math.factorial(n), n - j + 1)
    assert rem == 0
    return count


def perm_count_at(j: int, n: int, i: int) -> int:
    """Those permutations counted by :func:`perm_count` that also have ``p(j) = i``."""
    if not 1 <= j <= n:
        raise DomainError(f"need 1 <= j <= n, got j={j}, n={n}")
    if not 1 <= i <= j:
        return 0
    return math.comb(n - i, n - j) * math.factorial(n - j) * math.factorial(j - 1)


def dynkin_success_exact(n: int, v: int, *, exact: bool = False) -> float | Fraction:
    """Success probability when the first ``v - 1`` elements are skipped.

    After the skipped prefix the first element beating everything seen so
    far is taken.  ``v = 1`` takes the first element outright.
    """
    if not 1 <= v <= n:
        raise DomainError(f"need 1 <= v <= n, got v={v}, n={n}")
    if exact:
        if v == 1:
            return Fraction(1, n)
        return Fraction(v - 1, n) * sum(Fraction(1, i - 1) for i in range(v, n + 1))
    if v == 1:
        return 1 / n
    return (v - 1) / n * math.fsum(1 / (i - 1) for i in range(v, n + 1))


def rejection_rule_success(n: int, reject: int, *, exact: bool = False) -> float | Fraction:
    """Success probability of the rule that rejects the first ``reject`` arrivals."""
    if not 0 <= reject <= n:
        raise DomainError(f"need 0 <= reject <= n, got reject={reject}, n={n}")
    if reject == n:
        return Fraction(0) if exact else 0.0
    return dynkin_success_exact(n, reject + 1, exact=exact)


def dynkin_optimal_v(n: int) -> int:
    return max(range(1, n + 1), key=lambda v: dynkin_success_exact(n, v))


def prob_tail_sum(n: int, r: int) -> float:
    """``(1/n) * sum(1/j for j in 1..n-r)``."""
    if not 0 <= r < n:
        raise DomainError(f"need 0 <= r < n, got r={r}, n={n}")
    return math.fsum(1 / j for j in range(1, n - r + 1)) / n


def prob_tail_asymptotic(n: int, r: int) -> float:
    """Large-``n`` approximation ``(ln(n - r) + gamma) / n`` of :func:`prob_tail_sum`."""
    if not 0 <= r < n:
        raise DomainError(f"need 0 <= r < n, got r={r}, n={n}")
    return (math.log(n - r) + EULER_GAMMA) / n


def split_probability(alpha: float) -> float:
    """Chance the best lands after and the runner-up inside a rejected fraction ``alpha``."""
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * (1 - alpha)


def r_alpha(n: int, alpha: float) -> float:
    """Lower bound ``alpha (1 - alpha) ln(alpha n) / n`` on the two-feature success rate."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha * n < 1:
        raise DomainError(f"alpha * n must be at least 1, got {alpha * n}")
    return alpha * (1 - alpha) * math.log(alpha * n) / n


def r_half(n: int) -> float:
    return r_alpha(n, 0.5)


@dataclass(frozen=True)
class AlphaOptimum:
    n: int
    alpha_star: float
    r_alpha_star: float
    r_half: float

    @property
    def relative_gap(self) -> float:
        return (self.r_alpha_star - self.r_half) / self.r_alpha_star


def optimize_alpha(n: int) -> AlphaOptimum:
    """Maximise :func:`r_alpha` over ``alpha`` in ``(1/n, 1)``.

    The bound is unimodal there (its derivative changes sign once), so a
    bounded scalar search converges to the global maximum.
    """
    if n < 3:
        raise DomainError("need n >= 3")
    res = minimize_scalar(
        lambda a: -r_alpha(n, a),
        bounds=(1 / n, 1 - 1e-12),
        method="bounded",
        options={"xatol": 1e-10},
    )
    alpha = float(res.x)
    return AlphaOptimum(n=n, alpha_star=alpha, r_alpha_star=r_alpha(n, alpha), r_half=r_half(n))


def t0_steps(n: int, lam: float, variant: str = "table") -> float:
    """Testing steps needed before about ``lam`` vertices stay isolated.

    ``"stated"`` is ``n (ln n + ln lam) / 2 - 3 sqrt(lam)``; ``"table"`` drops
    the halving, which is the form whose floor gives the tabulated values.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    base = n * (math.log(n) + math.log(lam))
    if variant == "table":
        return base - 3 * math.sqrt(lam)
    if variant == "stated":
        return base / 2 - 3 * math.sqrt(lam)
    raise DomainError(f"unknown t0 variant {variant!r}; expected one of {T0_VARIANTS}")


def uniform_success_exact(n: int, k: int, v: int) -> float:
    """``(1/n) * sum(v/i for i in v..k)`` for the uniform matroid ``U_{k,n}``."""
    if not 1 <= v < k <= n:
        raise DomainError(f"need 1 <= v < k <= n, got v={v}, k={k}, n={n}")
    return math.fsum(v / i for i in range(v, k + 1)) / n


def uniform_policy_success(n: int, k: int, v: int, *, exact: bool = False) -> float | Fraction:
    """Exact success of rejecting ``v`` arrivals on ``U_{k,n}`` with weights ``1..n``.

    Arrivals after the ``k``-th are dependent, so the best element must
    arrive at a position in ``v+1..k`` after a prefix whose best is among
    the first ``v``.
    """
    if not 1 <= v < k <= n:
        raise DomainError(f"need 1 <= v < k <= n, got v={v}, k={k}, n={n}")
    if exact:
        return Fraction(v, n) * sum(Fraction(1, j) for j in range(v, k))
    return v / n * math.fsum(1 / j for j in range(v, k))


def uniform_optimal_v(n: int, k: int) -> int:
    """Arg-max over ``v`` of :func:`uniform_success_exact`."""
    if not 2 <= k <= n:
        raise DomainError(f"need 2 <= k <= n, got k={k}, n={n}")
    return max(range(1, k), key=lambda v: uniform_success_exact(n, k, v))
