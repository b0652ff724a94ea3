import json
import math

import pytest

from biharmonic_extremal.audit import (TABULATED_MULTIPLIERS, RunConfig, audit_table1, default_p_grid,
                                       ordering_ok, rows_to_csv, singularity_report)
from biharmonic_extremal.certificate import Verdict, dumps, exit_code
from biharmonic_extremal.cli import main
from biharmonic_extremal.params import ProblemParams, compute_Hn, compute_K0, compute_pc

E2 = math.e ** 2


def run_cli(args, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out.read_bytes()


def test_table_rows():
    assert list(TABULATED_MULTIPLIERS) == list(range(13, 32))
    assert TABULATED_MULTIPLIERS[13] == (2.03, 2.15)
    assert TABULATED_MULTIPLIERS[31] == (3.06, 4.05)
    assert all(TABULATED_MULTIPLIERS[n] == (4.6, 10.0) for n in range(19, 31))


def test_default_p_grid():
    grid = default_p_grid(13)
    assert grid[0] == pytest.approx(1.05 * compute_pc(13))
    assert grid[1:] == [50.0, 100.0, 500.0, 1000.0]


def test_audit_rejects_p_below_pc():
    with pytest.raises(ValueError):
        audit_table1([20.0], ns=[13])
    with pytest.raises(ValueError):
        audit_table1([], ns=[13])


def test_audit_rows_have_witnesses():
    rows = audit_table1(ns=[13, 17, 31])
    assert [(r.n, r.p) for r in rows] == sorted((r.n, r.p) for r in rows)
    for r in rows:
        assert r.sub_verdict in {v.value for v in Verdict}
        assert math.isfinite(r.sub_margin) and math.isfinite(r.stab_margin)
        assert 0 <= r.sub_witness_r <= 1 and 0 <= r.stab_witness_r <= 1
        if r.bundle_valid:
            assert r.sub_verdict == r.stab_verdict == "certified"


def test_audit_known_outcomes():
    rows = {(r.n, r.p): r for r in audit_table1(p_grid=[50.0], ns=[13, 17, 19, 31])}
    assert rows[13, 50.0].sub_verdict == "refuted"
    assert rows[17, 50.0].bundle_valid
    assert rows[19, 50.0].stab_verdict == "refuted"
    assert rows[31, 50.0].sub_verdict == "refuted"


def test_parallel_audit_matches_serial():
    serial = audit_table1(ns=[14, 20, 27])
    parallel = audit_table1(ns=[14, 20, 27], workers=3)
    assert rows_to_csv(serial) == rows_to_csv(parallel)


def test_run_config_round_trip():
    cfg = RunConfig(n=[13, 14], p_grid=[50.0], m=2.5, seed=11)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert cfg.to_json() == RunConfig.from_json(cfg.to_json()).to_json()


def test_ordering_rule():
    params = ProblemParams(32, 500.0, 2.0)
    assert ordering_ok(params, 2.0, 2.1)
    assert not ordering_ok(params, 2.0, 2.0)
    assert not ordering_ok(params, 2.1, 2.0)
    edge = compute_Hn(32) / (500.0 * compute_K0(params))
    assert ordering_ok(params, edge, edge)


def test_bundle_from_large_p_case():
    rep = singularity_report(32, 1e6, 2.0, E2, E2 + 0.1)
    assert rep["bundle"] == "valid"
    assert rep["subsolution"]["verdict"] == "certified"
    assert rep["stability"]["verdict"] == "certified"


def test_large_p_bundle_fails_with_classical_weight():
    # at r = 1 the classical weight caps β at Hn/(p K0) -> 50176/6720 < e² + 0.1
    rep = singularity_report(32, 1e6, 2.0, E2, E2 + 0.1, weight="classical")
    assert rep["stability"]["verdict"] == "refuted"
    assert rep["stability"]["worst_location"] == 1.0
    assert rep["bundle"] == "invalid"


def test_bundle_invalid_when_beta_not_larger():
    rep = singularity_report(17, 50.0, 3.5, 3.26, 3.26)
    assert rep["subsolution"]["verdict"] == "certified"
    assert rep["bundle"] == "invalid"


def test_contradiction_flag():
    rep = singularity_report(17, 50.0, 3.5, 3.26, 3.60, lambda_star=1e9)
    assert rep["bundle"] == "valid" and rep["contradiction"]
    rep = singularity_report(17, 50.0, 3.5, 3.26, 3.60, lambda_star=1.0)
    assert not rep["contradiction"]


def test_exit_codes():
    C, R, I = Verdict.CERTIFIED, Verdict.REFUTED, Verdict.INCONCLUSIVE
    assert exit_code([C, C]) == 0
    assert exit_code([C, I]) == 2
    assert exit_code([I, R]) == 1
    assert exit_code([]) == 0


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


@pytest.mark.parametrize("args,code", [
    (["constants", "--n", "13", "--p", "30"], 0),
    (["certify-subsolution", "--n", "13", "--p", "30", "--lambda-mult", "3.2"], 0),
    (["certify-subsolution", "--n", "13", "--p", "30", "--lambda-mult", "3.0"], 1),
    (["certify-stability", "--n", "13", "--p", "30", "--beta-mult", "2.9"], 0),
    (["certify-stability", "--n", "13", "--p", "30", "--beta-mult", "3.1"], 1),
    (["hr-sample", "--n", "13", "--trials", "5", "--seed", "1"], 0),
    (["eigen", "--n", "13", "--nodes", "100"], 0),
    (["bound-check", "--n", "13", "--p", "30", "--nodes", "100"], 0),
    (["report", "--n", "17", "--p", "50", "--lambda-mult", "3.26", "--beta-mult", "3.6",
      "--nodes", "100"], 0),
])
def test_cli_json_commands(args, code, tmp_path):
    got, data = run_cli(args, tmp_path)
    assert got == code
    parsed = json.loads(data)
    assert dumps(parsed).encode() == data
    assert "precision" in parsed


def test_cli_table1_exit_and_determinism(tmp_path):
    args = ["table1", "--n", "13", "17", "--p", "50", "100"]
    code1, first = run_cli(args, tmp_path)
    code2, second = run_cli(args, tmp_path)
    assert code1 == code2 == 1
    assert first == second
    cfg = json.loads(first)["config"]
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(RunConfig(**cfg).to_json(), encoding="utf-8")
    code3 = main(["table1", "--config", str(cfg_path)])
    assert code3 == 1
    assert (tmp_path / "out.txt").read_bytes() == first


def test_cli_table1_csv(tmp_path):
    code, data = run_cli(["table1", "--n", "17", "--p", "50", "--format", "csv"], tmp_path)
    assert code == 0
    lines = data.decode().splitlines()
    assert lines[0].startswith("n,m,p,lambda_mult,beta_mult")
    assert len(lines) == 2


def test_cli_branch_csv(tmp_path):
    code, data = run_cli(["branch", "--n", "13", "--p", "30", "--nodes", "100"], tmp_path)
    assert code == 0
    lines = data.decode().splitlines()
    assert lines[0] == "lambda,u0,mu1,converged"
    assert all(len(line.split(",")) == 4 for line in lines)


def test_cli_domain_error_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bound-check", "--n", "13", "--p", "5"])
    assert exc.value.code == 2
    assert "p_c" in capsys.readouterr().err
