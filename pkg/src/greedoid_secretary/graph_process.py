"""Random graph process on ``K_n``: edges arrive one at a time in uniform order.

Tracks the number of isolated vertices and of connected components as the
edge set grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import DomainError
from .simulator import trial_rng
from .structures import edge_endpoints

SIGNS = ("minus", "plus")


def sample_edge_prefix(rng: np.random.Generator, m: int, t: int) -> list[int]:
    """First ``t`` entries of a uniform permutation of ``range(m)``.

    Partial Fisher-Yates with a sparse swap table, so memory is ``O(t)``.
    """
    if not 0 <= t <= m:
        raise DomainError(f"need 0 <= t <= {m}, got {t}")
    if t == 0:
        return []
    picks = rng.integers(np.arange(t), m).tolist()
    swaps: dict[int, int] = {}
    out = []
    for i, j in enumerate(picks):
        out.append(swaps.get(j, j))
        swaps[j] = swaps.get(i, i)
    return out


@dataclass
class GraphProcessState:
    n: int
    t: int = 0
    isolated: int = 0
    components: int = 0
    edges: list = field(default_factory=list)
    isolated_trace: list = field(default_factory=list)
    component_trace: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def rank(self) -> int:
        return self.n - self.components

    def giant_plus_isolated(self) -> bool:
        """Whether every vertex is isolated except those of a single component."""
        return self.components - self.isolated == 1


def graph_process_run(n: int, t: int, seed: int, index: int = 0, *, trace: bool = False) -> GraphProcessState:
    """Add ``t`` uniformly ordered edges of ``K_n`` and report the final state.

    With ``trace=True`` the isolated-vertex and component counts after every
    step (starting with the empty graph) are kept.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    m = n * (n - 1) // 2
    if not 0 <= t <= m:
        raise DomainError(f"t must lie in 0..{m} for n={n}, got {t}")
    edges = sample_edge_prefix(trial_rng(seed, index), m, t)
    state = GraphProcessState(n=n, t=t, isolated=n, components=n, edges=edges)
    forest = DisjointSet(range(n))
    if trace:
        state.isolated_trace.append(n)
        state.component_trace.append(n)
    if edges:
        us, vs = edge_endpoints(np.asarray(edges))
        for u, v in zip(np.atleast_1d(us).tolist(), np.atleast_1d(vs).tolist()):
            if not forest.connected(u, v):
                state.isolated -= (forest.subset_size(u) == 1) + (forest.subset_size(v) == 1)
                forest.merge(u, v)
                state.components -= 1
            if trace:
                state.isolated_trace.append(state.isolated)
                state.component_trace.append(state.components)
    return state


def study_steps(n: int, lam: float, sign: str = "minus") -> int:
    """``floor(n (ln n -+ ln lam) / 2)`` edges, aiming at about ``lam`` (or ``1/lam``) isolated vertices."""
    if sign not in SIGNS:
        raise DomainError(f"sign must be one of {SIGNS}")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    shift = -math.log(lam) if sign == "minus" else math.log(lam)
    t = math.floor(n * (math.log(n) + shift) / 2)
    m = n * (n - 1) // 2
    if not 0 <= t <= m:
        raise DomainError(f"the step count {t} falls outside 0..{m}")
    return t


@dataclass(frozen=True)
class IsolatedVertexSummary:
    n: int
    lam: float
    sign: str
    t: int
    trials: int
    seed: int
    mean: float
    variance: float
    giant_fraction: float
    exceed_rate: float  # runs with N - lam > 3 sqrt(lam)
    exceed_bound: float = 0.005

    @property
    def dispersion(self) -> float:
        """Variance over mean, which is 1 for a Poisson count."""
        return self.variance / self.mean if self.mean else math.nan

    def record(self) -> dict:
        return {
            "experiment": "graph-study",
            "params": {"n": self.n, "lambda": self.lam, "sign": self.sign, "t": self.t},
            "seed": self.seed,
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "dispersion": self.dispersion,
            "giant_fraction": self.giant_fraction,
            "exceed_rate": self.exceed_rate,
            "exceed_bound": self.exceed_bound,
        }


def isolated_vertex_study(n: int, lam: float, sign: str = "minus", trials: int = 1000,
                          seed: int = 0) -> IsolatedVertexSummary:
    """Distribution of the isolated-vertex count after :func:`study_steps` edges."""
    if trials < 2:
        raise DomainError("need at least two trials")
    t = study_steps(n, lam, sign)
    counts = np.empty(trials)
    giant = 0
    for r in range(trials):
        state = graph_process_run(n, t, seed, r)
        counts[r] = state.isolated
        giant += state.giant_plus_isolated()
    exceed = counts - lam > 3 * math.sqrt(lam)
    return IsolatedVertexSummary(
        n=n, lam=lam, sign=sign, t=t, trials=trials, seed=seed,
        mean=float(counts.mean()), variance=float(counts.var(ddof=1)),
        giant_fraction=giant / trials, exceed_rate=float(exceed.mean()),
    )
