"""Command-line entry point: ``greedoid-secretary <command> ...``.

Exit status is 0 on success, 2 on a usage error and 3 when the arguments
are well formed but fall outside an operation's domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import exact
from .errors import GreedoidSecretaryError
from .graph_process import SIGNS, isolated_vertex_study
from .policies import DynkinPolicy, GreedoidThresholdPolicy, MorayneRule, TwoFeaturePolicy
from .setsystem import check_closure_properties, check_greedoid_axioms, check_matroid_axioms
from .simulator import (
    SUCCESS_CRITERIA,
    WEIGHT_TAGS,
    WeightModel,
    estimate_success,
    kn_secretary_experiment,
)
from .structures import (
    CompleteBinaryTree,
    GraphicKn,
    LinearHierarchy,
    RootedTreeAntimatroid,
    UniformMatroid,
    fixture_tree,
    structure_from_dict,
)

SEED_ENV = "GREEDOID_SECRETARY_SEED"
DEFAULT_SEED = 20240101
TABLE1_N = (10, 20, 50, 100)
TABLE2_N = (1000, 2000, 3000, 5000, 10000)
TABLE2_LAMBDA = (100, 200, 300, 400)
BUNDLED = ("u24", "linear4", "tree_fixture", "dag_fixture", "i2_violation")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


class Output:
    """Rows plus a display precision per column; rendered as csv, json or a table."""

    def __init__(self, columns: Sequence[str], rows: list[dict], digits: dict[str, int] | None = None,
                 notes: Sequence[str] = (), records: list[dict] | None = None):
        self.columns = list(columns)
        self.rows = rows
        self.digits = digits or {}
        self.notes = list(notes)
        self.records = records if records is not None else rows

    def _cell(self, col: str, value) -> str:
        if isinstance(value, float) and col in self.digits:
            return f"{value:.{self.digits[col]}f}"
        if isinstance(value, bool):
            return str(value).lower()
        return "" if value is None else str(value)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.records, indent=2, sort_keys=True) + "\n"
        cells = [[self._cell(c, row.get(c)) for c in self.columns] for row in self.rows]
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(self.columns)
            writer.writerows(cells)
            return buf.getvalue()
        widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c)
                  for i, c in enumerate(self.columns)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(self.columns, widths)),
                 "  ".join("-" * w for w in widths)]
        lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
        lines += self.notes
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_table1(ns: Sequence[int]) -> Output:
    rows = []
    for n in ns:
        opt = exact.optimize_alpha(n)
        rows.append({
            "n": n,
            "alpha_star": opt.alpha_star,
            "r_half": opt.r_half,
            "max_r_alpha": opt.r_alpha_star,
            "relative_gap": opt.relative_gap,
            "note": "*" if n == 10 else "",
        })
    notes = []
    if 10 in ns:
        notes.append("* n=10: max R_alpha is the maximiser's value; it differs from R_1/2.")
    return Output(["n", "alpha_star", "r_half", "max_r_alpha", "relative_gap", "note"], rows,
                  {"alpha_star": 4, "r_half": 5, "max_r_alpha": 5, "relative_gap": 4}, notes)


def cmd_table2(ns: Sequence[int], lams: Sequence[float], variant: str) -> Output:
    if not ns or not lams:
        raise UsageError("table2 needs at least one n and one lambda")
    rows, records = [], []
    for n in ns:
        row = {"n": n}
        for lam in lams:
            value = int(exact.t0_steps(n, lam, variant) // 1)
            row[f"lambda={lam:g}"] = value
            records.append({"n": n, "lambda": lam, "variant": variant, "t0": value})
        rows.append(row)
    cols = ["n"] + [f"lambda={lam:g}" for lam in lams]
    return Output(cols, rows, notes=[f"variant: {variant}"], records=records)


def load_structure(source: str):
    """Structure from a JSON file path or the name of a bundled example."""
    if source in BUNDLED:
        text = resources.files("greedoid_secretary").joinpath("data", f"{source}.json").read_text()
        origin = f"<bundled {source}>"
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {source}: {exc.strerror}") from None
        origin = source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise UsageError(
            f"{origin}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}\n    {' ' * (exc.colno - 1)}^"
        ) from None
    return structure_from_dict(data)


def cmd_axioms(source: str, closure: str | None) -> Output:
    structure = load_structure(source)
    kind = closure or structure.closure_kind
    rows = []
    for group, report in (
        ("matroid", check_matroid_axioms(structure)),
        ("greedoid", check_greedoid_axioms(structure)),
        (f"closure:{kind}", check_closure_properties(structure, kind)),
    ):
        data = report.to_dict()
        for name, ok in data["flags"].items():
            witness = data["witnesses"].get(name)
            rows.append({"check": group, "axiom": name, "holds": bool(ok),
                         "witness": json.dumps(witness, sort_keys=True) if witness else ""})
    flags = {(r["check"], r["axiom"]): r["holds"] for r in rows}
    is_matroid = all(v for (g, _), v in flags.items() if g == "matroid")
    greedoid = all(v for (g, _), v in flags.items() if g == "greedoid")
    antimatroid = greedoid and flags.get((f"closure:{kind}", "aex"), False) and kind == "convex"
    verdict = "matroid" if is_matroid else "antimatroid" if antimatroid else "greedoid" if greedoid else "none"
    notes = [f"structure: {structure!r}", f"verdict: {verdict}"]
    return Output(["check", "axiom", "holds", "witness"], rows, notes=notes,
                  records=[{"structure": repr(structure), "verdict": verdict, "checks": rows}])


def build_structure(args):
    name = args.structure
    if name == "uniform":
        return UniformMatroid(args.k if args.k is not None else args.n, args.n)
    if name == "linear":
        return LinearHierarchy(args.n)
    if name == "binary-tree":
        return CompleteBinaryTree(args.h)
    if name == "tree-fixture":
        return RootedTreeAntimatroid(fixture_tree())
    if name == "kn":
        return GraphicKn(args.n)
    return load_structure(name)


def build_policy(args):
    if args.policy == "dynkin":
        return DynkinPolicy(args.v)
    if args.policy == "threshold":
        return GreedoidThresholdPolicy(args.k0)
    if args.policy == "two-feature":
        return TwoFeaturePolicy(args.alpha)
    if args.policy == "morayne":
        return MorayneRule(args.h, "weight")
    return MorayneRule(args.h, "poset")


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.structure}/{args.policy} needs {', '.join(missing)}")


def cmd_simulate(args) -> Output:
    needs = {"uniform": ("n",), "linear": ("n",), "kn": ("n",), "binary-tree": ("h",)}
    _require(args, *needs.get(args.structure, ()))
    _require(args, *{"dynkin": ("v",), "threshold": ("k0",), "two-feature": ("alpha",),
                     "morayne": ("h",), "morayne-poset": ("h",)}[args.policy])
    structure = build_structure(args)
    policy = build_policy(args)
    params = {"structure": args.structure, "n": structure.n, "policy": args.policy,
              **policy.params(), "weights": args.weights, "success": args.success}
    if args.structure == "binary-tree":
        params["h"] = args.h
    if isinstance(structure, UniformMatroid):
        params["k"] = structure.k
    extra = {}
    if isinstance(structure, GraphicKn) and args.policy == "threshold" and args.weights.startswith("kn-case-"):
        result = kn_secretary_experiment(structure.vertices, int(args.weights[-1]), args.k0,
                                         args.trials, args.seed)
        summary = result.summary
        extra["blocked_rate"] = result.blocked_rate
    else:
        summary = estimate_success(
            structure, policy, WeightModel(args.weights, args.multiplicity), args.trials, args.seed,
            success=args.success, workers=args.workers, exhaustive=args.exhaustive,
        )
    record = summary.record("simulate", params)
    record.update(extra)
    row = {**params, "trials": summary.trials, "successes": summary.successes,
           "estimate": summary.estimate, "half_width": summary.half_width, "seed": summary.seed, **extra}
    cols = list(params) + ["seed", "trials", "successes", "estimate", "half_width"] + list(extra)
    return Output(cols, [row], {"estimate": 6, "half_width": 6, "blocked_rate": 4}, records=[record])


def cmd_graph_study(args) -> Output:
    s = isolated_vertex_study(args.n, args.lam, args.sign, args.trials, args.seed)
    record = s.record()
    row = {"n": s.n, "lambda": s.lam, "sign": s.sign, "t": s.t, "seed": s.seed, "trials": s.trials,
           "mean_N": s.mean, "var_N": s.variance, "var_over_mean": s.dispersion,
           "giant_fraction": s.giant_fraction, "exceed_3sigma": s.exceed_rate, "bound": s.exceed_bound}
    digits = {"mean_N": 3, "var_N": 3, "var_over_mean": 3, "giant_fraction": 3, "exceed_3sigma": 4, "bound": 3}
    return Output(list(row), [row], digits, records=[record])


def cmd_perm_count(js: Sequence[int] | None, n: int, brute: bool) -> Output:
    rows = []
    perms = list(itertools.permutations(range(1, n + 1))) if brute else None
    for j in js or range(1, n + 1):
        row = {"j": j, "n": n, "count": exact.perm_count(j, n)}
        if brute:
            row["brute_force"] = sum(all(p[k] > p[j - 1] for k in range(j, n)) for p in perms)
        rows.append(row)
    return Output(list(rows[0]), rows)


def cmd_dynkin_exact(n: int, vs: Sequence[int] | None) -> Output:
    rows = []
    for v in vs or range(1, n + 1):
        frac = exact.dynkin_success_exact(n, v, exact=n <= 200)
        rows.append({"n": n, "v": v, "probability": float(frac),
                     "fraction": str(frac) if n <= 200 else ""})
    return Output(["n", "v", "probability", "fraction"], rows, {"probability": 6})


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser(seed: int) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--output", type=Path, help="write here instead of standard output")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=seed,
                        help=f"master seed (default from ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--workers", type=_positive, default=1)

    parser = argparse.ArgumentParser(prog="greedoid-secretary",
                                     description="Secretary problems on greedoids and matroids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("axioms", parents=[common], help="check axioms and closure properties")
    p.add_argument("structure", help=f"JSON file or a bundled example: {', '.join(BUNDLED)}")
    p.add_argument("--closure", choices=("tau", "sigma", "convex"))

    p = sub.add_parser("table1", parents=[common], help="optimal rejection fraction for two features")
    p.add_argument("--n", type=int, nargs="+", default=list(TABLE1_N))

    p = sub.add_parser("table2", parents=[common], help="testing steps t0 on K_n")
    p.add_argument("--n", type=int, nargs="*", default=list(TABLE2_N))
    p.add_argument("--lam", type=float, nargs="*", default=list(TABLE2_LAMBDA))
    p.add_argument("--variant", choices=exact.T0_VARIANTS, default="table")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo success rate of a policy")
    p.add_argument("--structure", default="uniform",
                   help="uniform, linear, binary-tree, tree-fixture, kn, or a structure JSON file")
    p.add_argument("--policy", required=True,
                   choices=("dynkin", "threshold", "two-feature", "morayne", "morayne-poset"))
    p.add_argument("--weights", choices=WEIGHT_TAGS, default="haphazard")
    p.add_argument("--multiplicity", choices=("levels", "literal"), default="levels")
    p.add_argument("--success", choices=SUCCESS_CRITERIA, default="max-weight")
    p.add_argument("--n", type=_positive)
    p.add_argument("--k", type=_positive)
    p.add_argument("--h", type=int)
    p.add_argument("--v", type=_positive)
    p.add_argument("--k0", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--trials", type=_positive, default=10_000)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all orders (n <= 8)")

    p = sub.add_parser("graph-study", parents=[common], help="isolated vertices of the random graph process")
    p.add_argument("--n", type=_positive, default=2000)
    p.add_argument("--lam", type=float, default=20.0)
    p.add_argument("--sign", choices=SIGNS, default="minus")
    p.add_argument("--trials", type=_positive, default=200)

    p = sub.add_parser("perm-count", parents=[common], help="permutations whose tail beats position j")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--j", type=_positive, nargs="*")
    p.add_argument("--brute", action="store_true", help="also count by enumeration")

    p = sub.add_parser("dynkin-exact", parents=[common], help="exact classical success probabilities")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--v", type=_positive, nargs="*")
    return parser


def run(args) -> Output:
    if args.command == "table1":
        return cmd_table1(args.n)
    if args.command == "table2":
        return cmd_table2(args.n, args.lam, args.variant)
    if args.command == "axioms":
        return cmd_axioms(args.structure, args.closure)
    if args.command == "simulate":
        return cmd_simulate(args)
    if args.command == "graph-study":
        return cmd_graph_study(args)
    if args.command == "perm-count":
        return cmd_perm_count(args.j, args.n, args.brute)
    return cmd_dynkin_exact(args.n, args.v)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = run(args).render(args.format)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GreedoidSecretaryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
