"""Online stopping rules as decision functions over an observation state.

The simulator owns the stream: it keeps the arrived set, its rank and
closure, and the best weight seen, writes them into an
:class:`ObservationState` before every arrival and asks the policy for a
:class:`Decision`.  A policy never sees the order or the weights of
elements that have not arrived yet.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Protocol

from .errors import DomainError, StructuralError
from .setsystem import Structure
from .structures import CompleteBinaryTree, LinearHierarchy


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    FORCED = "forced-reject-dependent"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    reason: str

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPT


ACCEPT = Decision(Verdict.ACCEPT, "record")
REJECT_PHASE = Decision(Verdict.REJECT, "rejection-phase")
REJECT_WEIGHT = Decision(Verdict.REJECT, "not-a-record")
REJECT_RULE = Decision(Verdict.REJECT, "rule")
FORCED = Decision(Verdict.FORCED, "dependent-on-rejected")


class ObservationState:
    """What the observer knows when element ``element`` arrives at step ``step``.

    ``arrived``, ``rank_before`` and ``best_weight`` describe the elements
    that arrived before this step, all of them rejected.  ``in_closure`` says
    whether the new element lies in their closure.  ``scratch`` is the
    policy's own memory, threaded through :meth:`Policy.advance`.
    """

    __slots__ = ("n", "step", "element", "weight", "arrived", "rank_before",
                 "best_weight", "in_closure", "scratch")

    def __init__(self, n: int):
        self.n = n
        self.step = 0
        self.element = -1
        self.weight = 0.0
        self.arrived = 0
        self.rank_before = 0
        self.best_weight = -math.inf
        self.in_closure = False
        self.scratch: Any = None


class Policy(Protocol):
    name: str
    weight_ordered: bool  # acceptance requires beating every earlier weight

    def bind(self, structure: Structure) -> None:
        """Validate that the policy applies to ``structure``."""

    def initial_scratch(self) -> Any: ...

    def decide(self, state: ObservationState) -> Decision: ...

    def advance(self, scratch: Any, state: ObservationState) -> Any:
        """Scratch after the current element has been rejected."""

    def params(self) -> dict: ...


class _Stateless:
    weight_ordered = True

    def bind(self, structure: Structure) -> None:
        pass

    def initial_scratch(self) -> None:
        return None

    def advance(self, scratch: Any, state: ObservationState) -> None:
        return None


class DynkinPolicy(_Stateless):
    """Reject the first ``v`` arrivals, then take the first one at least as good as all before."""

    name = "dynkin"

    def __init__(self, v: int):
        if v < 0:
            raise DomainError("dynkin policy needs v >= 0")
        self.v = v

    def decide(self, state: ObservationState) -> Decision:
        if state.step <= self.v:
            return REJECT_PHASE
        if state.weight >= state.best_weight:
            return ACCEPT
        return REJECT_WEIGHT

    def params(self) -> dict:
        return {"v": self.v}


class GreedoidThresholdPolicy(_Stateless):
    """Reject until the arrived set reaches rank ``k0``, then take the first independent record.

    Independence means lying outside the closure of everything rejected so
    far; a record must strictly beat every earlier weight.
    """

    name = "threshold"

    def __init__(self, k0: int):
        if k0 < 0:
            raise DomainError("rank threshold must be >= 0")
        self.k0 = k0

    def bind(self, structure: Structure) -> None:
        full_rank = structure.rank(structure.full)
        if self.k0 > full_rank:
            raise DomainError(f"rank threshold {self.k0} exceeds the rank {full_rank} of the structure")

    def decide(self, state: ObservationState) -> Decision:
        if state.rank_before < self.k0:
            return REJECT_PHASE
        if state.in_closure:
            return FORCED
        if state.weight > state.best_weight:
            return ACCEPT
        return REJECT_WEIGHT

    def params(self) -> dict:
        return {"k0": self.k0}


class TwoFeaturePolicy(_Stateless):
    """Reject ``floor(alpha n)`` candidates, then take the first that beats the rejected in rank and weight.

    On a :class:`LinearHierarchy` the rank comparison is exactly the
    independence bit, so the policy only ever reads two booleans.
    """

    name = "two-feature"

    def __init__(self, alpha: float):
        if not 0 < alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        self.alpha = alpha

    def bind(self, structure: Structure) -> None:
        if not isinstance(structure, LinearHierarchy):
            raise StructuralError("two-feature policy runs on a linear hierarchy")

    def phase_length(self, n: int) -> int:
        return math.floor(self.alpha * n)

    def decide(self, state: ObservationState) -> Decision:
        if state.step <= self.phase_length(state.n):
            return REJECT_PHASE
        higher_rank = not state.in_closure
        heavier = state.weight > state.best_weight
        if higher_rank and heavier:
            return ACCEPT
        return FORCED if not higher_rank else REJECT_WEIGHT

    def params(self) -> dict:
        return {"alpha": self.alpha}


class MorayneRule:
    """Stopping rule for the root of a complete binary tree of height ``h``.

    Accept the ``k``-th arrival when it beats all earlier arrivals and the
    earlier arrivals either do not form a linear sequence (heights rising by
    one at each step) or ``k > h/2``.

    ``comparison="weight"`` reads "beats" as a strictly larger weight.
    ``comparison="poset"`` reads it as being an ancestor of every earlier
    arrival in the tree order.
    """

    name = "morayne"

    def __init__(self, h: int, comparison: str = "weight"):
        if h < 0:
            raise DomainError("tree height must be >= 0")
        if comparison not in ("weight", "poset"):
            raise DomainError("comparison must be 'weight' or 'poset'")
        self.h = h
        self.comparison = comparison
        self.weight_ordered = comparison == "weight"

    def bind(self, structure: Structure) -> None:
        if not isinstance(structure, CompleteBinaryTree):
            raise StructuralError("Morayne's rule applies to complete binary trees only")
        if structure.h != self.h:
            raise StructuralError(f"rule built for height {self.h}, tree has height {structure.h}")

    # scratch: (linear, last_height, lowest common ancestor of the arrivals or -1)
    def initial_scratch(self) -> tuple[bool, int, int]:
        return True, -1, -1

    def decide(self, state: ObservationState) -> Decision:
        linear, _, lca = state.scratch
        if self.comparison == "weight":
            beats = state.weight > state.best_weight
        else:
            beats = lca < 0 or _is_ancestor(state.element, lca)
        if not beats:
            return REJECT_WEIGHT
        if linear and not state.step > self.h / 2:
            return REJECT_RULE
        return ACCEPT

    def advance(self, scratch: tuple[bool, int, int], state: ObservationState) -> tuple[bool, int, int]:
        linear, last, lca = scratch
        height = CompleteBinaryTree.level(state.element)
        if last >= 0 and height != last + 1:
            linear = False
        lca = state.element if lca < 0 else _lca(lca, state.element)
        return linear, height, lca

    def params(self) -> dict:
        return {"h": self.h, "comparison": self.comparison}


def _lca(a: int, b: int) -> int:
    while a != b:
        if a > b:
            a = (a - 1) // 2
        else:
            b = (b - 1) // 2
    return a


def _is_ancestor(a: int, b: int) -> bool:
    """Whether level-order vertex ``a`` is an ancestor of (or equal to) ``b``."""
    while b > a:
        b = (b - 1) // 2
    return a == b


def dynkin_policy(v: int) -> DynkinPolicy:
    return DynkinPolicy(v)


def greedoid_threshold_policy(k0: int) -> GreedoidThresholdPolicy:
    return GreedoidThresholdPolicy(k0)


def two_feature_policy(alpha: float) -> TwoFeaturePolicy:
    return TwoFeaturePolicy(alpha)


def morayne_policy(h: int, comparison: str = "weight") -> MorayneRule:
    return MorayneRule(h, comparison)
