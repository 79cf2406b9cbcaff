import json

import pytest

from greedoid_secretary.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_table1_default_rows(capsys):
    code, out, _ = run(capsys, "table1", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "n,alpha_star,r_half,max_r_alpha,relative_gap,note"
    assert lines[1] == "10,0.6084,0.04024,0.04302,0.0647,*"
    assert lines[4].startswith("100,") and ",0.00978,0.00992,0.0141," in lines[4]


def test_table1_single_n(capsys):
    code, out, _ = run(capsys, "table1", "--n", "50", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 1 and rows[0]["n"] == 50


def test_table2_grid_and_variants(capsys):
    code, out, _ = run(capsys, "table2", "--format", "csv")
    assert code == 0 and "1000,11482,12163,12559,12839" in out
    code, out, _ = run(capsys, "table2", "--n", "1000", "--lam", "100", "--variant", "stated", "--format", "json")
    assert json.loads(out) == [{"n": 1000, "lambda": 100.0, "variant": "stated", "t0": 5726}]


def test_table2_empty_lambda_is_usage_error(capsys):
    code, _, err = run(capsys, "table2", "--lam")
    assert code == 2 and "lambda" in err


@pytest.mark.parametrize("name, verdict", [
    ("u24", "matroid"), ("linear4", "antimatroid"), ("tree_fixture", "antimatroid"), ("i2_violation", "none"),
])
def test_axioms_on_bundled_examples(capsys, name, verdict):
    code, out, _ = run(capsys, "axioms", name)
    assert code == 0 and f"verdict: {verdict}" in out


def test_axioms_prints_witness(capsys):
    code, out, _ = run(capsys, "axioms", "i2_violation", "--format", "json")
    record = json.loads(out)[0]
    i2 = next(c for c in record["checks"] if c["axiom"] == "i2")
    assert not i2["holds"] and json.loads(i2["witness"]) == {"member": [0, 1], "subset": [0]}


def test_axioms_parse_error_has_line_context(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2,\n "members": [[] [0]]}\n')
    code, _, err = run(capsys, "axioms", str(bad))
    assert code == 2 and f"{bad}:2:" in err and '"members"' in err


def test_axioms_domain_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "members": [[0, 7]]}')
    assert run(capsys, "axioms", str(bad))[0] == 3


def test_simulate_record_is_self_describing(capsys):
    code, out, _ = run(capsys, "simulate", "--policy", "dynkin", "--n", "50", "--v", "18",
                       "--trials", "500", "--seed", "5", "--format", "json")
    record = json.loads(out)[0]
    assert code == 0
    assert set(record) >= {"experiment", "params", "seed", "trials", "successes", "estimate", "half_width"}
    assert record["params"]["v"] == 18 and record["seed"] == 5


def test_simulate_csv_is_byte_identical(tmp_path, capsys):
    args = ["simulate", "--structure", "binary-tree", "--policy", "morayne", "--h", "3",
            "--weights", "tree-case-1", "--success", "root", "--trials", "300", "--format", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_var(monkeypatch, capsys):
    args = ("simulate", "--policy", "dynkin", "--n", "20", "--v", "7", "--trials", "200", "--format", "json")
    monkeypatch.setenv("GREEDOID_SECRETARY_SEED", "123")
    record = json.loads(run(capsys, *args)[1])[0]
    assert record["seed"] == 123
    monkeypatch.setenv("GREEDOID_SECRETARY_SEED", "abc")
    assert run(capsys, *args)[0] == 2


def test_simulate_kn_reports_blocked_rate(capsys):
    code, out, _ = run(capsys, "simulate", "--structure", "kn", "--policy", "threshold", "--n", "8",
                       "--k0", "3", "--weights", "kn-case-1", "--trials", "100", "--format", "json")
    assert code == 0 and "blocked_rate" in json.loads(out)[0]


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--structure", "kn", "--policy", "morayne", "--n", "5", "--h", "2"], 3),
    (["simulate", "--policy", "dynkin", "--n", "5", "--v", "1", "--trials", "0"], 2),
    (["simulate", "--policy", "dynkin", "--n", "5"], 2),
    (["simulate", "--policy", "dynkin", "--v", "2"], 2),
    (["bogus"], 2),
])
def test_simulate_errors(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_graph_study(capsys):
    code, out, _ = run(capsys, "graph-study", "--n", "300", "--lam", "5", "--trials", "20", "--format", "json")
    record = json.loads(out)[0]
    assert code == 0 and record["exceed_bound"] == 0.005 and "exceed_rate" in record
    code, _, err = run(capsys, "graph-study", "--n", "10", "--lam", "0.0001")
    assert code == 3 and "outside" in err


def test_perm_count_and_dynkin_exact(capsys):
    code, out, _ = run(capsys, "perm-count", "--n", "5", "--brute", "--format", "csv")
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert code == 0 and all(r[2] == r[3] for r in rows)
    code, out, _ = run(capsys, "dynkin-exact", "--n", "4", "--v", "2", "--format", "csv")
    assert out.strip().splitlines()[1] == "4,2,0.458333,11/24"
