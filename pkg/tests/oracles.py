"""Naive reference implementations written straight from the definitions.

Everything here works on frozensets of 0-based indices and enumerates
subsets or permutations explicitly.  None of it shares code with the
package, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import reduce


def all_subsets(n: int) -> list[frozenset]:
    items = range(n)
    return [frozenset(c) for r in range(n + 1) for c in itertools.combinations(items, r)]


def to_mask(s) -> int:
    return sum(1 << i for i in s)


def from_mask(m: int) -> frozenset:
    return frozenset(i for i in range(m.bit_length()) if m >> i & 1)


def rank(family, a: frozenset) -> int:
    return max((len(x) for x in family if x <= a), default=0)


def tau(family, a: frozenset, n: int) -> frozenset:
    r = rank(family, a)
    return a | frozenset(x for x in range(n) if rank(family, a | {x}) == r)


def sigma(family, a: frozenset, n: int) -> frozenset:
    ground = frozenset(range(n))
    closed = [x for x in all_subsets(n) if a <= x and tau(family, x, n) == x]
    return reduce(frozenset.intersection, closed, ground)


def convex(family, a: frozenset, n: int) -> frozenset | None:
    ground = frozenset(range(n))
    hulls = [x for x in all_subsets(n) if a <= x and (ground - x) in family]
    if not hulls:
        return None
    return reduce(frozenset.intersection, hulls, ground)


def hereditary(family) -> bool:
    return all(frozenset(c) in family for x in family for r in range(len(x))
               for c in itertools.combinations(sorted(x), r))


def augmentable(family) -> bool:
    return all(
        any(a | {x} in family for x in b - a)
        for a in family for b in family if len(b) > len(a)
    )


def accessible(family) -> bool:
    return all(any(x - {e} in family for e in x) for x in family if x)


def closure_properties(cl, n: int) -> dict[str, bool]:
    subsets = all_subsets(n)
    c = {a: cl(a) for a in subsets}
    out = {
        "s1": all(a <= c[a] for a in subsets),
        "s2": all(c[a] <= c[b] for a in subsets for b in subsets if a <= b),
        "s3": all(c[c[a]] == c[a] for a in subsets),
    }
    out["ex"] = all(
        e in c[a | {f}]
        for a in subsets for e in range(n) for f in range(n)
        if f not in c[a] and f in c[a | {e}]
    )
    out["aex"] = all(
        e not in c[a | {f}]
        for a in subsets for e in range(n) for f in range(n)
        if e != f and f not in c[a] and f in c[a | {e}]
    )
    return out


def perm_count(j: int, n: int) -> int:
    return sum(
        all(p[k] > p[j - 1] for k in range(j, n))
        for p in itertools.permutations(range(1, n + 1))
    )


def classical_success(n: int, skip: int) -> Fraction:
    """Skip ``skip`` arrivals, then take the first one beating all before; ``skip=0`` takes the first."""
    wins = 0
    total = 0
    for p in itertools.permutations(range(n)):
        total += 1
        best = max(p[:skip], default=-1)
        for x in p[skip:]:
            if x > best:
                wins += x == n - 1
                break
    return Fraction(wins, total)


def uniform_success(n: int, k: int, v: int) -> Fraction:
    """Same rule on U_{k,n}: arrivals after the k-th are unavailable."""
    wins = 0
    total = 0
    for p in itertools.permutations(range(n)):
        total += 1
        best = max(p[:v], default=-1)
        for x in p[v:k]:
            if x > best:
                wins += x == n - 1
                break
    return Fraction(wins, total)
