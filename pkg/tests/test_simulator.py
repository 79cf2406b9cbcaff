import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedoid_secretary import exact
from greedoid_secretary.errors import DomainError, StructuralError
from greedoid_secretary.graph_process import (
    graph_process_run,
    isolated_vertex_study,
    sample_edge_prefix,
    study_steps,
)
from greedoid_secretary.policies import (
    REJECT_PHASE,
    DynkinPolicy,
    GreedoidThresholdPolicy,
    MorayneRule,
    TwoFeaturePolicy,
)
from greedoid_secretary.setsystem import ExplicitStructure, GroundSet, SetFamily
from greedoid_secretary.simulator import (
    EstimateSummary,
    InvariantViolation,
    WeightModel,
    estimate_success,
    kn_case3_values,
    kn_secretary_experiment,
    random_arrival,
    run_trial,
    trial_rng,
)
from greedoid_secretary.structures import (
    CompleteBinaryTree,
    GraphicKn,
    LinearHierarchy,
    RootedDagGreedoid,
    RootedTreeAntimatroid,
    UniformMatroid,
    fixture_dag,
    fixture_tree,
)


class NeverAccept:
    name = "never"

    def bind(self, structure):
        pass

    def initial_scratch(self):
        return None

    def decide(self, state):
        return REJECT_PHASE

    def advance(self, scratch, state):
        return None

    def params(self):
        return {}


# --- arrivals -------------------------------------------------------------------


def test_random_arrival_is_deterministic():
    assert list(random_arrival(7, 50)) == list(random_arrival(7, 50))
    assert list(random_arrival(7, 50)) != list(random_arrival(8, 50))
    assert list(random_arrival(3, 1)) == [0]
    with pytest.raises(DomainError):
        random_arrival(1, 0)


def test_random_arrival_is_uniform():
    draws = 100_000
    counts = Counter(tuple(trial_rng(11, i).permutation(5)) for i in range(draws))
    assert len(counts) == 120
    p = 1 / 120
    sigma = math.sqrt(draws * p * (1 - p))
    assert all(abs(c - draws * p) < 4 * sigma for c in counts.values())


# --- single trials --------------------------------------------------------------


def test_linear_hierarchy_dynkin_equivalent_over_all_orders():
    lin = LinearHierarchy(4)
    weights = [1, 2, 3, 4]
    wins = sum(run_trial(lin, DynkinPolicy(1), weights, order).success
               for order in itertools.permutations(range(4)))
    assert wins == 11


def test_never_accept():
    out = run_trial(UniformMatroid(2, 5), NeverAccept(), [1, 2, 3, 4, 5], [4, 3, 2, 1, 0])
    assert out.accepted is None and not out.success and out.accept_step is None


def test_kn_optimum_blocked_by_rejected_edges():
    k4 = GraphicKn(4)
    weights = WeightModel("kn-case-1").draw(k4, trial_rng(0, 0)).tolist()
    order = [k4.edge_index(*e) for e in [(1, 3), (1, 4), (3, 4), (1, 2), (2, 3), (2, 4)]]
    out = run_trial(k4, GreedoidThresholdPolicy(2), weights, order)
    assert out.forced_rejections >= 1
    assert not out.success


def test_run_trial_rejects_bad_sizes():
    with pytest.raises(DomainError):
        run_trial(UniformMatroid(2, 4), DynkinPolicy(1), [1, 2, 3], [0, 1, 2, 3])
    with pytest.raises(DomainError):
        run_trial(UniformMatroid(2, 4), DynkinPolicy(1), [1, 2, 3, 4], [0, 1, 2, 3], success="best")


def test_broken_tracker_is_caught():
    class Leaky(UniformMatroid):
        def tracker(self):
            t = super().tracker()
            t.contains = lambda e: False
            return t

    s = Leaky(1, 4)
    with pytest.raises(InvariantViolation):
        run_trial(s, DynkinPolicy(1), [1, 2, 3, 4], [0, 1, 2, 3], verify="every-step")
    with pytest.raises(InvariantViolation):
        run_trial(s, DynkinPolicy(1), [1, 2, 3, 4], [0, 1, 2, 3])


# --- exhaustive mode against exact values ------------------------------------------


@pytest.mark.parametrize("n", range(2, 7))
def test_exhaustive_dynkin_equals_exact(n):
    for v in range(1, n):
        got = estimate_success(UniformMatroid(n, n), DynkinPolicy(v), WeightModel("ideal"), 1, 0, exhaustive=True)
        assert got.trials == math.factorial(n)
        assert got.estimate == pytest.approx(exact.dynkin_success_exact(n, v + 1))


@pytest.mark.parametrize("n,k", [(5, 3), (6, 4)])
def test_exhaustive_threshold_on_uniform_equals_exact(n, k):
    for v in range(1, k):
        got = estimate_success(UniformMatroid(k, n), GreedoidThresholdPolicy(v), WeightModel("ideal"), 1, 0,
                               exhaustive=True, verify="every-step")
        assert got.estimate == pytest.approx(exact.uniform_policy_success(n, k, v))


def test_exhaustive_limits():
    with pytest.raises(DomainError):
        estimate_success(UniformMatroid(9, 9), DynkinPolicy(1), WeightModel("ideal"), 1, 0, exhaustive=True)
    with pytest.raises(DomainError):
        estimate_success(UniformMatroid(4, 4), DynkinPolicy(1), WeightModel("haphazard"), 1, 0, exhaustive=True)


# --- incremental closure against fresh closure -------------------------------------

EVERY_STEP = [
    (lambda: UniformMatroid(3, 7), lambda: GreedoidThresholdPolicy(2), "haphazard", "max-weight"),
    (lambda: LinearHierarchy(8), lambda: TwoFeaturePolicy(0.5), "haphazard", "max-weight"),
    (lambda: RootedTreeAntimatroid(fixture_tree()), lambda: GreedoidThresholdPolicy(1), "tree-case-1", "root"),
    (lambda: CompleteBinaryTree(2), lambda: MorayneRule(2), "tree-case-1", "root"),
    (lambda: CompleteBinaryTree(3), lambda: MorayneRule(3, "poset"), "tree-case-2", "root"),
    (lambda: RootedDagGreedoid(fixture_dag()), lambda: GreedoidThresholdPolicy(1), "haphazard", "max-weight"),
    (lambda: GraphicKn(5), lambda: GreedoidThresholdPolicy(2), "kn-case-3", "max-weight"),
]


@pytest.mark.parametrize("make_structure, make_policy, weights, success", EVERY_STEP)
def test_every_step_verification(make_structure, make_policy, weights, success):
    summary = estimate_success(make_structure(), make_policy(), WeightModel(weights), 400, 5,
                               success=success, verify="every-step")
    assert 0 <= summary.successes <= summary.trials == 400


def test_explicit_family_runs():
    fam = ExplicitStructure(SetFamily(GroundSet(range(3)), [[], [0], [1], [0, 1], [0, 2]]))
    summary = estimate_success(fam, GreedoidThresholdPolicy(1), WeightModel("haphazard"), 300, 1, verify="every-step")
    assert summary.trials == 300


# --- engines and determinism ------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 40).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(1, n), st.integers(1, n - 1), st.integers(0, 2**63 - 1))))
def test_vector_engine_matches_loop(data):
    n, k, v, seed = data
    for policy in (DynkinPolicy(v), GreedoidThresholdPolicy(min(v, k))):
        s = UniformMatroid(k, n)
        loop = estimate_success(s, policy, WeightModel("haphazard"), 300, seed, engine="loop")
        vec = estimate_success(s, policy, WeightModel("haphazard"), 300, seed, engine="vector")
        assert loop == vec


def test_vector_engine_scope():
    with pytest.raises(DomainError):
        estimate_success(LinearHierarchy(5), DynkinPolicy(1), WeightModel("ideal"), 10, 0, engine="vector")
    with pytest.raises(DomainError):
        estimate_success(LinearHierarchy(5), DynkinPolicy(1), WeightModel("ideal"), 10, 0, engine="warp")


def test_worker_count_does_not_change_results():
    args = (CompleteBinaryTree(3), MorayneRule(3), WeightModel("tree-case-1"), 3_001, 99)
    one = estimate_success(*args, success="root", workers=1)
    two = estimate_success(*args, success="root", workers=2)
    assert one == two


def test_same_seed_same_summary():
    args = (LinearHierarchy(30), TwoFeaturePolicy(0.5), WeightModel("haphazard"), 500, 3)
    assert estimate_success(*args) == estimate_success(*args)


def test_trials_must_be_positive():
    with pytest.raises(DomainError):
        estimate_success(UniformMatroid(2, 4), DynkinPolicy(1), WeightModel("ideal"), 0, 0)


def two_feature_oracle(n, alpha, trials, seed):
    """Rank/weight pairs drawn directly; no structure, tracker or policy object."""
    rng = np.random.default_rng(seed)
    m = math.floor(alpha * n)
    wins = 0
    for _ in range(trials):
        r, w = rng.permutation(n), rng.permutation(n)
        rmax, wmax = r[:m].max(), w[:m].max()
        for q in range(m, n):
            if r[q] > rmax and w[q] > wmax:
                wins += w[q] == n - 1
                break
            rmax, wmax = max(rmax, r[q]), max(wmax, w[q])
    return wins / trials


def test_two_feature_matches_independent_oracle():
    summary = estimate_success(LinearHierarchy(30), TwoFeaturePolicy(0.5), WeightModel("haphazard"), 40_000, 17)
    p = two_feature_oracle(30, 0.5, 40_000, 18)
    se = math.sqrt(2 * p * (1 - p) / 40_000)
    assert abs(summary.estimate - p) < 4 * se


def test_two_feature_falls_short_of_r_alpha():
    # alpha (1 - alpha) ln(alpha n) / n is offered as a lower bound; the rule does not reach it.
    summary = estimate_success(LinearHierarchy(100), TwoFeaturePolicy(0.5555), WeightModel("haphazard"), 20_000, 17)
    bound = exact.r_alpha(100, 0.5555)
    assert summary.estimate + 3 * summary.std_error < bound


# --- summaries ------------------------------------------------------------------


def test_summary_half_width():
    s = EstimateSummary(trials=400, successes=100, seed=1)
    assert s.estimate == 0.25
    assert s.half_width == 1.96 * math.sqrt(0.25 * 0.75 / 400)
    rec = s.record("x", {"n": 3})
    assert rec["params"] == {"n": 3} and rec["successes"] == 100
    with pytest.raises(ValueError):
        EstimateSummary(trials=3, successes=4, seed=0)


# --- weight models --------------------------------------------------------------


def test_simple_weight_models():
    rng = trial_rng(0, 0)
    assert list(WeightModel("ideal").draw(UniformMatroid(2, 4), rng)) == [1, 2, 3, 4]
    assert sorted(WeightModel("haphazard").draw(UniformMatroid(2, 6), rng)) == [1, 2, 3, 4, 5, 6]
    tree = RootedTreeAntimatroid(fixture_tree())
    w = WeightModel("tree-case-1").draw(tree, rng)
    assert w[0] == 5 and w.argmax() == 0 and w.min() == 1


@pytest.mark.parametrize("h", [1, 2, 3, 4])
def test_tree_case2_multiplicities(h):
    tree = CompleteBinaryTree(h)
    rng = trial_rng(0, 0)
    levels = Counter(WeightModel("tree-case-2").draw(tree, rng).tolist())
    assert levels == {float(h - j + 1): 2**j for j in range(h + 1)}
    literal = Counter(WeightModel("tree-case-2", "literal").draw(tree, rng).tolist())
    assert sum(literal.values()) == tree.n
    assert all(literal[float(h - j + 1)] == j + 1 for j in range(h))


def test_kn_weight_cases():
    k5 = GraphicKn(5)
    rng = trial_rng(0, 0)
    w1 = WeightModel("kn-case-1").draw(k5, rng)
    w2 = WeightModel("kn-case-2").draw(k5, rng)
    assert set(w1) == set(w2) == {1.0, 2.0, 3.0, 4.0}
    assert list(w1).count(4.0) == 1 and list(w2).count(4.0) == 4


@pytest.mark.parametrize("n", [3, 4, 7, 10, 51])
def test_kn_case3_counts(n):
    values = kn_case3_values(n, trial_rng(n, 0))
    counts = Counter(values.tolist())
    assert len(values) == n * (n - 1) // 2
    assert set(counts) == set(map(float, range(1, n)))
    assert set(counts.values()) <= {n // 2, (n + 1) // 2}


def test_weight_model_errors():
    with pytest.raises(DomainError):
        WeightModel("mystery")
    with pytest.raises(StructuralError):
        WeightModel("kn-case-1").draw(UniformMatroid(2, 4), trial_rng(0, 0))
    with pytest.raises(StructuralError):
        WeightModel("tree-case-1").draw(GraphicKn(4), trial_rng(0, 0))


# --- K_n experiments ------------------------------------------------------------


def test_kn_case2_beats_case1():
    one = kn_secretary_experiment(20, 1, None, 800, 4)
    two = kn_secretary_experiment(20, 2, None, 800, 4)
    assert two.summary.estimate > one.summary.estimate + 3 * math.hypot(
        one.summary.std_error, two.summary.std_error)
    assert 0 <= one.blocked_rate <= 1


def test_kn_distinct_weights_rarely_succeed():
    s = GraphicKn(40)
    summary = estimate_success(s, GreedoidThresholdPolicy(14), WeightModel("haphazard"), 400, 8)
    assert summary.estimate < 0.1


def test_kn_experiment_domain():
    with pytest.raises(DomainError):
        kn_secretary_experiment(2, 1, None, 10, 0)
    with pytest.raises(DomainError):
        kn_secretary_experiment(5, 4, None, 10, 0)


# --- random graph process -------------------------------------------------------


def test_graph_process_endpoints():
    empty = graph_process_run(6, 0, 1)
    assert (empty.isolated, empty.components, empty.rank) == (6, 6, 0)
    full = graph_process_run(6, 15, 1)
    assert (full.isolated, full.components, full.rank) == (0, 1, 5)
    assert sorted(full.edges) == list(range(15))
    with pytest.raises(DomainError):
        graph_process_run(6, 16, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32), st.floats(0, 1))
def test_graph_process_invariants(n, seed, frac):
    m = n * (n - 1) // 2
    t = int(frac * m)
    state = graph_process_run(n, t, seed, trace=True)
    iso, comp = state.isolated_trace, state.component_trace
    assert all(a >= b for a, b in zip(iso, iso[1:]))
    assert all(a >= b for a, b in zip(comp, comp[1:]))
    assert len(set(state.edges)) == t
    kn = GraphicKn(n)
    mask = sum(1 << e for e in state.edges)
    assert state.rank == kn.rank(mask) == n - state.components


def test_edge_prefix_is_uniform():
    draws = 60_000
    counts = Counter(tuple(sample_edge_prefix(trial_rng(5, i), 6, 2)) for i in range(draws))
    assert len(counts) == 30
    p = 1 / 30
    sigma = math.sqrt(draws * p * (1 - p))
    assert all(abs(c - draws * p) < 4 * sigma for c in counts.values())


def test_study_steps():
    assert study_steps(2000, 20, "minus") == math.floor(1000 * (math.log(2000) - math.log(20)))
    with pytest.raises(DomainError):
        study_steps(10, 1e-4)
    with pytest.raises(DomainError):
        study_steps(10, 2, "times")


def test_small_isolated_study():
    s = isolated_vertex_study(300, 5, "minus", 60, 2)
    assert 3 < s.mean < 7
    assert s.record()["params"]["t"] == s.t
    plus = isolated_vertex_study(300, 5, "plus", 30, 2)
    assert plus.mean < 1
