"""End-to-end CLI tests: JSON/CSV shapes, determinism, config-file semantics
and the exit-code contract (0 ok, 2 usage, 3 solver, 4 budget)."""

import json
import math

import pytest

from frozen_constants import (
    BINOM_MAXIMAL_SUCCESS_M1E4,
    BINOM_WALK_SUCCESS_M1E4,
    LAMBDA_S_Q4,
    THETA_R_Q4_L3_6,
)
from rcmf import phase
from rcmf.cli import cli_main
from rcmf.core import SolverError


def run_json(tmp_path, argv, name="out.json"):
    out = tmp_path / name
    code = cli_main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


def run_csv(tmp_path, argv, name="out.csv"):
    out = tmp_path / name
    code = cli_main(argv + ["--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# {")
    return code, lines[1].split(","), [ln.split(",") for ln in lines[2:]]


class TestCriticalPoints:
    def test_q4_full_report(self, tmp_path):
        code, doc = run_json(
            tmp_path, ["critical-points", "--q", "4", "--lambda", "3.6"]
        )
        assert code == 0
        assert abs(doc["lambda_S"] - 4.0) <= 1e-8
        assert doc["lambda_s"] == pytest.approx(LAMBDA_S_Q4, abs=1e-9)
        assert doc["theta_r"] == pytest.approx(THETA_R_Q4_L3_6, abs=1e-9)
        assert doc["theta_S_threshold"] == pytest.approx(1 - 4.0 / 3.6, abs=1e-12)

    def test_without_lambda_emits_nulls(self, tmp_path):
        code, doc = run_json(tmp_path, ["critical-points", "--q", "2"])
        assert code == 0
        assert doc["theta_r"] is None and doc["theta_min"] is None
        assert doc["lambda_c"] == doc["lambda_s"] == doc["lambda_S"] == 2.0

    def test_floats_round_trip_17g(self, tmp_path):
        # 17 significant digits reproduce the binary double exactly
        _, doc = run_json(
            tmp_path, ["critical-points", "--q", "4", "--lambda", "3.6"]
        )
        assert doc["theta_r"] == phase.theta_r(phase.PhaseParams(4.0, 3.6))
        assert doc["lambda_s"] == phase.lambda_s(4.0)

    def test_provenance_excludes_paths(self, tmp_path):
        _, doc = run_json(
            tmp_path, ["critical-points", "--q", "3", "--seed", "11"]
        )
        prov = doc["provenance"]
        assert prov["command"] == "critical-points"
        assert prov["args"]["seed"] == 11
        for key in ("out", "config", "func", "command", "report"):
            assert key not in prov["args"]


class TestDriftScan:
    def test_grid_rows(self, tmp_path):
        code, header, rows = run_csv(
            tmp_path,
            ["drift-scan", "--q", "4", "--lambda", "3.6", "--grid", "100"],
        )
        assert code == 0
        assert header == ["theta", "phi", "f", "f_prime"]
        assert len(rows) == 100
        theta, ph, f, _ = map(float, rows[-1])
        assert theta == 1.0 and f == pytest.approx(theta - ph, abs=1e-15)

    def test_requires_lambda(self, capsys):
        assert cli_main(["drift-scan", "--q", "4"]) == 2
        capsys.readouterr()


class TestSimulate:
    ARGS = [
        "simulate", "--dynamics", "cm", "--n", "1000", "--q", "2",
        "--lambda", "3", "--steps", "10", "--seed", "7",
    ]

    def test_trace_csv_shape(self, tmp_path):
        code, header, rows = run_csv(tmp_path, self.ARGS)
        assert code == 0
        assert header == ["t", "L1", "L2", "I", "chi", "active", "giant_active"]
        assert len(rows) == 11
        assert [int(r[0]) for r in rows] == list(range(11))
        for r in rows:
            assert all(tok.lstrip("-").isdigit() for tok in r)

    def test_same_seed_identical_bytes(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert cli_main(self.ARGS + ["--out", str(a)]) == 0
        assert cli_main(self.ARGS + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_different_rows(self, tmp_path):
        _, _, rows7 = run_csv(tmp_path, self.ARGS, name="s7.csv")
        args8 = self.ARGS[:-1] + ["8"]
        _, _, rows8 = run_csv(tmp_path, args8, name="s8.csv")
        assert rows7 != rows8

    def test_record_every_and_giant_init(self, tmp_path):
        argv = [
            "simulate", "--dynamics", "cm", "--n", "500", "--q", "2",
            "--lambda", "1", "--steps", "9", "--record-every", "4",
            "--init", "giant:0.5",
        ]
        code, _, rows = run_csv(tmp_path, argv)
        assert code == 0
        assert [int(r[0]) for r in rows] == [0, 4, 8, 9]
        assert int(rows[0][1]) == 250

    def test_edge_dynamics_mark_missing_activity(self, tmp_path):
        argv = [
            "simulate", "--dynamics", "hb", "--n", "40", "--q", "2",
            "--lambda", "1", "--steps", "3",
        ]
        code, _, rows = run_csv(tmp_path, argv)
        assert code == 0
        assert all(int(r[5]) == -1 and int(r[6]) == -1 for r in rows)

    def test_bad_init_is_usage_error(self, capsys):
        argv = [
            "simulate", "--dynamics", "cm", "--n", "40", "--q", "2",
            "--lambda", "1", "--steps", "3", "--init", "warm",
        ]
        assert cli_main(argv) == 2
        assert "bad --init" in capsys.readouterr().err


class TestCoupling:
    def test_binomial_maximal_matches_exact(self, tmp_path):
        code, doc = run_json(
            tmp_path,
            ["coupling", "--mode", "binomial", "--y", "10",
             "--trials", "2000", "--seed", "3"],
        )
        assert code == 0
        assert doc["mode"] == "binomial"
        assert doc["params"]["method"] == "maximal"
        assert abs(doc["success_rate"] - BINOM_MAXIMAL_SUCCESS_M1E4[10]) <= 0.05

    def test_binomial_walk_method(self, tmp_path):
        code, doc = run_json(
            tmp_path,
            ["coupling", "--mode", "binomial", "--method", "walk",
             "--y", "10", "--trials", "2000", "--seed", "4"],
        )
        assert code == 0
        assert abs(doc["success_rate"] - BINOM_WALK_SUCCESS_M1E4[10]) <= 0.05

    def test_identity_small_run(self, tmp_path):
        code, doc = run_json(
            tmp_path,
            ["coupling", "--mode", "identity", "--n", "60", "--q", "2",
             "--lambda", "1", "--replicas", "6", "--max-steps", "2000"],
        )
        assert code == 0
        assert doc["mode"] == "identity"
        assert doc["timeouts"] == 0
        assert 0 < doc["median_time"] <= 2000

    def test_identity_budget_exit(self, tmp_path):
        out = tmp_path / "o.json"
        code = cli_main(
            ["coupling", "--mode", "identity", "--n", "60", "--q", "2",
             "--lambda", "1", "--replicas", "4", "--max-steps", "1",
             "--out", str(out)]
        )
        assert code == 4
        assert json.loads(out.read_text())["median_time"] is None


class TestExact:
    @pytest.mark.parametrize("n", [3, 4])
    def test_report_passes(self, tmp_path, n):
        code, doc = run_json(
            tmp_path, ["exact", "--n", str(n), "--q", "2", "--lambda", "2"]
        )
        assert code == 0
        assert doc["pass"] is True
        assert doc["mu_total_mass"] == pytest.approx(1.0, abs=1e-12)
        assert doc["su_hb_sandwich_ok"] is True
        assert doc["cm_su_sandwich_ok"] is True
        for name in ("cm", "hb", "su"):
            assert doc[name]["spectral_gap"] > 0
            assert doc[name]["mixing_lower"] <= doc[name]["mixing_upper"]

    def test_report_flag_synonym(self, tmp_path):
        rp = tmp_path / "report.json"
        code = cli_main(
            ["exact", "--n", "3", "--q", "2", "--lambda", "2",
             "--report", str(rp)]
        )
        assert code == 0
        assert json.loads(rp.read_text())["pass"] is True

    def test_size_limit(self, capsys):
        assert cli_main(["exact", "--n", "6", "--q", "2", "--lambda", "2"]) == 2
        assert "n <= 5" in capsys.readouterr().err

    def test_infeasible_density(self, capsys):
        assert cli_main(["exact", "--n", "3", "--q", "4", "--lambda", "3.6"]) == 2
        capsys.readouterr()


class TestConfigFile:
    def test_config_supplies_required_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# trace settings\n"
            "dynamics = cm\n"
            "n = 200\n"
            "q = 2\n"
            "lambda = 1.5\n"
            "steps = 6\n"
            "record-every = 3\n"
        )
        code, _, rows = run_csv(
            tmp_path, ["simulate", "--config", str(cfg), "--seed", "5"]
        )
        assert code == 0
        assert [int(r[0]) for r in rows] == [0, 3, 6]

    def test_explicit_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("dynamics = cm\nn = 200\nq = 2\nlambda = 1.5\nsteps = 9\n")
        code, _, rows = run_csv(
            tmp_path,
            ["simulate", "--config", str(cfg), "--steps", "4"],
        )
        assert code == 0
        assert int(rows[-1][0]) == 4

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("qq = 2\n")
        assert cli_main(["critical-points", "--config", str(cfg), "--q", "2"]) == 2
        assert "does not match any flag" in capsys.readouterr().err

    def test_bad_value_type_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("dynamics = cm\nn = 200\nq = 2\nlambda = 1.5\nsteps = abc\n")
        assert cli_main(["simulate", "--config", str(cfg)]) == 2
        capsys.readouterr()

    def test_missing_file_rejected(self, capsys):
        assert (
            cli_main(
                ["critical-points", "--config", "/nonexistent.cfg", "--q", "2"]
            )
            == 2
        )
        assert "cannot read config" in capsys.readouterr().err


class TestExitCodes:
    def test_usage_missing_required(self, capsys):
        assert cli_main(["critical-points"]) == 2
        assert cli_main(["simulate", "--dynamics", "cm"]) == 2
        assert cli_main(["no-such-command"]) == 2
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert cli_main(["--help"]) == 0
        assert cli_main(["critical-points", "--help"]) == 0
        capsys.readouterr()

    def test_invalid_model_params(self, capsys):
        # p = lam/n >= 1 is rejected before any simulation work
        argv = [
            "simulate", "--dynamics", "cm", "--n", "3", "--q", "4",
            "--lambda", "3.6", "--steps", "1",
        ]
        assert cli_main(argv) == 2
        capsys.readouterr()

    def test_solver_failure_maps_to_three(self, monkeypatch, capsys):
        def boom(q, lam=None):
            raise SolverError("no bracket")

        monkeypatch.setattr(phase, "critical_points", boom)
        assert cli_main(["critical-points", "--q", "4"]) == 3
        assert "solver failure" in capsys.readouterr().err

    def test_mix_estimate_budget_exit(self, tmp_path):
        out = tmp_path / "mix.json"
        code = cli_main(
            ["mix-estimate", "--n", "200", "--q", "2", "--lambda", "2",
             "--t-max", "0", "--replicas", "100", "--out", str(out)]
        )
        assert code == 4
        doc = json.loads(out.read_text())
        assert doc["proxy"] is None
        assert doc["estimates"][0]["tv"] == 1.0

    def test_escape_budget_exit(self, tmp_path):
        out = tmp_path / "esc.json"
        code = cli_main(
            ["escape", "--n", "128", "--q", "2", "--lambda", "1",
             "--theta0", "0.5", "--band-lo", "0", "--band-hi", "1",
             "--max-steps", "30", "--replicas", "4", "--out", str(out)]
        )
        assert code == 4
        doc = json.loads(out.read_text())
        assert doc["median"] is None
        assert doc["timeouts"] == 4
        assert doc["times"] == [-1, -1, -1, -1]

    def test_bad_thetas_usage(self, capsys):
        base = [
            "validate-drift", "--n", "1000", "--q", "2", "--lambda", "2",
            "--replicas", "5",
        ]
        assert cli_main(base + ["--thetas", "a,b"]) == 2
        assert cli_main(base + ["--thetas", ","]) == 2
        capsys.readouterr()


class TestMixEstimateAndDrift:
    def test_mix_estimate_success(self, tmp_path):
        code, doc = run_json(
            tmp_path,
            ["mix-estimate", "--n", "500", "--q", "2", "--lambda", "1",
             "--t-max", "12", "--replicas", "900", "--seed", "2"],
        )
        assert code == 0
        assert doc["proxy"] is not None and doc["proxy"] <= 12
        assert doc["bins"] == 30
        assert len(doc["estimates"]) == 13

    def test_validate_drift_rows(self, tmp_path):
        code, header, rows = run_csv(
            tmp_path,
            ["validate-drift", "--n", "2000", "--q", "4", "--lambda", "3.6",
             "--thetas", "0.5,0.7", "--replicas", "50"],
        )
        assert code == 0
        assert header == ["theta", "empirical", "phi", "gap"]
        assert len(rows) == 2
        pp = phase.PhaseParams(4.0, 3.6)
        for r in rows:
            theta, emp, ph, gap = map(float, r)
            assert ph == pytest.approx(phase.phi(theta, pp), abs=1e-12)
            assert gap == pytest.approx(emp - ph, abs=1e-12)
            assert 0.0 <= emp <= 1.0
            assert abs(gap) <= 0.1

    def test_stdout_default(self, capsys):
        code = cli_main(["critical-points", "--q", "2"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["lambda_c"] == 2.0
