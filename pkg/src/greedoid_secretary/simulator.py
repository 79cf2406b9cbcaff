"""Seeded Monte Carlo engine for the stopping rules.

Every trial draws from its own counter-based stream keyed by
``(seed, trial index)``, so results do not depend on how trials are split
across worker processes.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .policies import (
    FORCED,
    DynkinPolicy,
    GreedoidThresholdPolicy,
    ObservationState,
    Policy,
    Verdict,
)
from .setsystem import Structure
from .structures import GraphicKn, RootedTreeAntimatroid, UniformMatroid

MASK64 = (1 << 64) - 1
EXHAUSTIVE_LIMIT = 8
SUCCESS_CRITERIA = ("max-weight", "root")
WEIGHT_TAGS = (
    "ideal", "haphazard", "tree-case-1", "tree-case-2", "kn-case-1", "kn-case-2", "kn-case-3",
)


class InvariantViolation(AssertionError):
    """A simulated run broke a rule of the observation model."""


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` of the run keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64, counter=[0, 0, index, 0]))


def random_arrival(seed: int, n: int, index: int = 0) -> np.ndarray:
    """Uniform arrival order of ``n`` elements (0-based indices)."""
    if n < 1:
        raise DomainError("need n >= 1")
    return trial_rng(seed, index).permutation(n)


# --------------------------------------------------------------------------
# Weight models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightModel:
    """How weights are assigned to the elements of a structure.

    ``multiplicity`` only matters for ``tree-case-2``: ``"levels"`` gives the
    ``j``-th largest value to as many vertices as level ``j`` holds,
    ``"literal"`` gives it to ``j + 1`` vertices and the smallest value to
    every vertex left over.
    """

    tag: str
    multiplicity: str = "levels"

    def __post_init__(self):
        if self.tag not in WEIGHT_TAGS:
            raise DomainError(f"unknown weight model {self.tag!r}; expected one of {WEIGHT_TAGS}")
        if self.multiplicity not in ("levels", "literal"):
            raise DomainError("multiplicity must be 'levels' or 'literal'")

    @property
    def deterministic(self) -> bool:
        return self.tag in ("ideal", "tree-case-1", "kn-case-1", "kn-case-2")

    def sampler(self, structure: Structure) -> Callable[[np.random.Generator], np.ndarray]:
        tag = self.tag
        n = structure.n
        if tag == "ideal":
            fixed = np.arange(1, n + 1, dtype=np.float64)
            return lambda rng: fixed
        if tag == "haphazard":
            return lambda rng: (rng.permutation(n) + 1).astype(np.float64)
        if tag in ("tree-case-1", "tree-case-2"):
            if not isinstance(structure, RootedTreeAntimatroid):
                raise StructuralError(f"{tag} weights need a rooted tree")
            heights = np.array(structure.heights)
            h = int(heights.max())
            if tag == "tree-case-1":
                fixed = (h - heights + 1).astype(np.float64)
                return lambda rng: fixed
            values = tree_case2_values(h, np.bincount(heights, minlength=h + 1), self.multiplicity, n)
            return lambda rng: rng.permutation(values)
        if not isinstance(structure, GraphicKn):
            raise StructuralError(f"{tag} weights need the complete graph K_n")
        tail = np.array(structure.tail) + 1  # smaller endpoint, 1-based
        vertices = structure.vertices
        if tag == "kn-case-1":
            fixed = tail.astype(np.float64)
            return lambda rng: fixed
        if tag == "kn-case-2":
            fixed = (vertices - tail).astype(np.float64)
            return lambda rng: fixed
        return lambda rng: kn_case3_values(vertices, rng)

    def draw(self, structure: Structure, rng: np.random.Generator) -> np.ndarray:
        return self.sampler(structure)(rng)


def tree_case2_values(h: int, level_sizes: Sequence[int], multiplicity: str, n: int) -> np.ndarray:
    """Multiset of ``h + 1`` descending values ``h+1, ..., 1`` spread over ``n`` vertices."""
    if multiplicity == "levels":
        counts = list(level_sizes)
    else:
        counts = [j + 1 for j in range(h + 1)]
        if sum(counts) > n:
            raise DomainError("literal multiplicities exceed the number of vertices")
        counts[h] += n - sum(counts)
    values = np.repeat(np.arange(h + 1, 0, -1, dtype=np.float64), counts)
    assert len(values) == n
    return values


def kn_case3_values(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n - 1`` values, each on ``floor(n/2)`` or ``ceil(n/2)`` random edges of ``K_n``."""
    m = n * (n - 1) // 2
    counts = np.full(n - 1, n // 2)
    extra = m - counts.sum()
    if extra:
        counts[rng.choice(n - 1, size=extra, replace=False)] += 1
    values = np.repeat(np.arange(1, n, dtype=np.float64), counts)
    return rng.permutation(values)


# --------------------------------------------------------------------------
# Single trials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    accepted: object | None
    accepted_index: int | None
    accept_step: int | None
    success: bool
    forced_rejections: int


def _depends(structure: Structure, arrived: int, element: int) -> bool:
    """Closure membership recomputed from scratch."""
    if isinstance(structure, GraphicKn):
        return bool(structure.tau(arrived) >> element & 1)
    return bool(structure.closure(arrived) >> element & 1)


def _run(structure: Structure, policy: Policy, weights: list, order: list,
         success: str, verify: str) -> TrialOutcome:
    tracker = structure.tracker()
    state = ObservationState(structure.n)
    state.scratch = policy.initial_scratch()
    decide = policy.decide
    advance = policy.advance
    best = -math.inf
    forced = 0
    every = verify == "every-step"
    weight_ordered = getattr(policy, "weight_ordered", True)
    for step, e in enumerate(order, 1):
        w = weights[e]
        in_closure = tracker.contains(e)
        if every and in_closure != _depends(structure, tracker.arrived, e):
            raise InvariantViolation(f"incremental closure disagrees at step {step}")
        state.step = step
        state.element = e
        state.weight = w
        state.arrived = tracker.arrived
        state.rank_before = tracker.rank
        state.best_weight = best
        state.in_closure = in_closure
        decision = decide(state)
        if decision.verdict is Verdict.ACCEPT:
            if in_closure:
                decision = FORCED
            else:
                if verify != "off":
                    if _depends(structure, tracker.arrived, e):
                        raise InvariantViolation(f"accepted element {e} depends on rejected elements")
                    if weight_ordered and w < best:
                        raise InvariantViolation(f"accepted element {e} is lighter than an earlier one")
                if success == "root":
                    won = e == 0
                else:
                    won = w == max(weights)
                return TrialOutcome(structure.labels[e], e, step, won, forced)
        if decision.verdict is Verdict.FORCED:
            forced += 1
        state.scratch = advance(state.scratch, state)
        tracker.add(e)
        if w > best:
            best = w
    return TrialOutcome(None, None, None, False, forced)


def run_trial(structure: Structure, policy: Policy, weights: Sequence[float], order: Sequence[int],
              *, success: str = "max-weight", verify: str = "accept") -> TrialOutcome:
    """Stream ``order`` (0-based element indices) through ``policy``.

    Elements in the closure of the rejected ones are rejected whatever the
    policy says.  ``verify`` is ``"accept"`` (re-derive independence of the
    accepted element from scratch), ``"every-step"`` (also compare the
    incremental closure with a fresh one at each arrival) or ``"off"``.
    """
    if success not in SUCCESS_CRITERIA:
        raise DomainError(f"success must be one of {SUCCESS_CRITERIA}")
    if len(order) != structure.n or len(weights) != structure.n:
        raise DomainError("order and weights must cover every element once")
    policy.bind(structure)
    return _run(structure, policy, list(weights), [int(e) for e in order], success, verify)


# --------------------------------------------------------------------------
# Estimates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateSummary:
    trials: int
    successes: int
    seed: int
    forced_rejections: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in 0..trials")

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def std_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def half_width(self) -> float:
        """Half-width of the normal-approximation 95% interval."""
        return 1.96 * self.std_error

    def record(self, experiment: str, params: dict) -> dict:
        return {
            "experiment": experiment,
            "params": dict(params),
            "seed": self.seed,
            "trials": self.trials,
            "successes": self.successes,
            "estimate": self.estimate,
            "half_width": self.half_width,
        }


def _vector_eligible(structure: Structure, policy: Policy, model: WeightModel) -> bool:
    return (
        isinstance(structure, UniformMatroid)
        and isinstance(policy, (DynkinPolicy, GreedoidThresholdPolicy))
        and model.tag in ("ideal", "haphazard")
    )


def _range_loop(structure, policy, model, start, stop, seed, success, verify) -> tuple[int, int]:
    sampler = model.sampler(structure)
    n = structure.n
    wins = forced = 0
    for i in range(start, stop):
        rng = trial_rng(seed, i)
        order = rng.permutation(n).tolist()
        weights = sampler(rng).tolist()
        out = _run(structure, policy, weights, order, success, verify)
        wins += out.success
        forced += out.forced_rejections
    return wins, forced


VECTOR_BLOCK = 512


def _range_vector(structure, policy, model, start, stop, seed, success, verify) -> tuple[int, int]:
    """Batched evaluation for threshold-type rules on ``U_{k,n}``.

    Consumes the per-trial streams exactly like :func:`_range_loop`, so both
    engines give identical outcomes trial by trial.
    """
    sampler = model.sampler(structure)
    n, k = structure.n, structure.k
    skip = policy.v if isinstance(policy, DynkinPolicy) else policy.k0
    steps = np.arange(1, n + 1)
    open_steps = (steps > skip) & (steps <= k)
    # After step k every arrival is dependent.  A threshold rule reports each
    # such arrival as forced; the Dynkin rule only those it would have taken.
    late = steps > max(skip, k)
    wins = forced = 0
    for lo in range(start, stop, VECTOR_BLOCK):
        hi = min(lo + VECTOR_BLOCK, stop)
        w = np.empty((hi - lo, n))
        for row, i in enumerate(range(lo, hi)):
            rng = trial_rng(seed, i)
            order = rng.permutation(n)
            w[row] = sampler(rng)[order]
        before = np.maximum.accumulate(w, axis=1)
        before = np.concatenate([np.full((hi - lo, 1), -np.inf), before[:, :-1]], axis=1)
        candidates = (w > before) & open_steps
        found = candidates.any(axis=1)
        first = candidates.argmax(axis=1)
        chosen = w[np.arange(hi - lo), first]
        if success == "root":
            raise DomainError("root success needs a tree structure")
        wins += int(np.count_nonzero(found & (chosen == w.max(axis=1))))
        if isinstance(policy, DynkinPolicy):
            blocked = np.count_nonzero((w >= before) & late, axis=1)
        else:
            blocked = np.full(hi - lo, np.count_nonzero(late))
        forced += int(blocked[~found].sum())
    return wins, forced


def _chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    size = -(-trials // workers)
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def estimate_success(structure: Structure, policy: Policy, model: WeightModel, trials: int,
                     seed: int, *, success: str = "max-weight", workers: int = 1,
                     engine: str = "auto", exhaustive: bool = False,
                     verify: str = "accept") -> EstimateSummary:
    """Fraction of successful trials, with its normal-approximation interval.

    ``exhaustive=True`` replaces sampling by every arrival order (``n <= 8``,
    deterministic weights only); ``trials`` is then ignored.
    """
    if success not in SUCCESS_CRITERIA:
        raise DomainError(f"success must be one of {SUCCESS_CRITERIA}")
    policy.bind(structure)
    if exhaustive:
        return _exhaustive(structure, policy, model, seed, success, verify)
    if trials < 1:
        raise DomainError("need at least one trial")
    if engine == "auto":
        engine = "vector" if _vector_eligible(structure, policy, model) and verify != "every-step" else "loop"
    if engine == "vector":
        if not _vector_eligible(structure, policy, model):
            raise DomainError("the vector engine covers threshold rules on uniform matroids only")
        worker_fn = _range_vector
    elif engine == "loop":
        worker_fn = _range_loop
    else:
        raise DomainError(f"unknown engine {engine!r}")
    if workers <= 1:
        wins, forced = worker_fn(structure, policy, model, 0, trials, seed, success, verify)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(worker_fn, structure, policy, model, lo, hi, seed, success, verify)
                for lo, hi in _chunks(trials, workers)
            ]
            parts = [f.result() for f in futures]
        wins = sum(p[0] for p in parts)
        forced = sum(p[1] for p in parts)
    return EstimateSummary(trials=trials, successes=wins, seed=seed, forced_rejections=forced)


def _exhaustive(structure, policy, model, seed, success, verify) -> EstimateSummary:
    if structure.n > EXHAUSTIVE_LIMIT:
        raise DomainError(f"exhaustive mode is limited to n <= {EXHAUSTIVE_LIMIT}")
    if not model.deterministic:
        raise DomainError("exhaustive mode needs a deterministic weight model")
    weights = model.draw(structure, trial_rng(seed, 0)).tolist()
    wins = forced = total = 0
    for order in itertools.permutations(range(structure.n)):
        out = _run(structure, policy, weights, list(order), success, verify)
        wins += out.success
        forced += out.forced_rejections
        total += 1
    return EstimateSummary(trials=total, successes=wins, seed=seed, forced_rejections=forced)


# --------------------------------------------------------------------------
# K_n experiments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KnExperimentResult:
    summary: EstimateSummary
    blocked: int  # runs whose every maximum-weight edge was dependent when selection began

    @property
    def blocked_rate(self) -> float:
        return self.blocked / self.summary.trials


def default_k0(n: int) -> int:
    """Rank threshold ``round((n - 1) / e)`` on ``K_n``."""
    return round((n - 1) / math.e)


def kn_secretary_experiment(n: int, case: int, k0: int | None, trials: int, seed: int,
                            *, verify: str = "accept") -> KnExperimentResult:
    """Threshold rule on the graphic matroid of ``K_n`` under edge-weight case 1, 2 or 3."""
    if n < 3:
        raise DomainError("need n >= 3")
    if case not in (1, 2, 3):
        raise DomainError("weight case must be 1, 2 or 3")
    if trials < 1:
        raise DomainError("need at least one trial")
    structure = GraphicKn(n)
    k0 = default_k0(n) if k0 is None else k0
    policy = GreedoidThresholdPolicy(k0)
    policy.bind(structure)
    sampler = WeightModel(f"kn-case-{case}").sampler(structure)
    wins = forced = blocked = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        order = rng.permutation(structure.n).tolist()
        weights = sampler(rng).tolist()
        out = _run(structure, policy, weights, order, "max-weight", verify)
        wins += out.success
        forced += out.forced_rejections
        blocked += _optimum_blocked(structure, weights, order, k0)
    summary = EstimateSummary(trials=trials, successes=wins, seed=seed, forced_rejections=forced)
    return KnExperimentResult(summary=summary, blocked=blocked)


def _optimum_blocked(structure: GraphicKn, weights: list, order: list, k0: int) -> bool:
    tracker = structure.tracker()
    for e in order:
        if tracker.rank >= k0:
            break
        tracker.add(e)
    top = max(weights)
    return all(
        tracker.arrived >> e & 1 or tracker.contains(e)
        for e, w in enumerate(weights) if w == top
    )


__all__ = [
    "EstimateSummary",
    "InvariantViolation",
    "KnExperimentResult",
    "TrialOutcome",
    "WeightModel",
    "estimate_success",
    "kn_secretary_experiment",
    "random_arrival",
    "run_trial",
    "trial_rng",
]
