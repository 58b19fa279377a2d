import json
import subprocess
import sys

import numpy as np
import pytest

import almlab as al
from almlab.cli import main


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# bench


def test_bench_writes_problem(tmp_path, capsys):
    out = tmp_path / "qp.json"
    rc = main(["bench", "--family", "qp", "--d", "4", "--p", "2", "--out", str(out)])
    assert rc == 0
    assert "wrote qp_d4_p2_rho1_seed0" in capsys.readouterr().out
    pb = al.read_problem(str(out))
    assert pb.d == 4 and pb.p == 2


def test_bench_reruns_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["bench", "--family", "basis_pursuit", "--d", "6", "--p", "2",
            "--seed", "5"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert read_bytes(a) == read_bytes(b)


def test_bench_env_seed_override(tmp_path, monkeypatch):
    via_flag, via_env = tmp_path / "flag.json", tmp_path / "env.json"
    assert main(["bench", "--family", "qp", "--d", "4", "--p", "2",
                 "--seed", "3", "--out", str(via_flag)]) == 0
    monkeypatch.setenv("ALMLAB_SEED", "3")
    assert main(["bench", "--family", "qp", "--d", "4", "--p", "2",
                 "--seed", "0", "--out", str(via_env)]) == 0
    assert read_bytes(via_flag) == read_bytes(via_env)


def test_bench_env_seed_must_be_integer(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ALMLAB_SEED", "banana")
    rc = main(["bench", "--family", "qp", "--d", "4", "--p", "2",
               "--out", str(tmp_path / "x.json")])
    assert rc == 1
    assert "ALMLAB_SEED" in capsys.readouterr().err


def test_bench_requires_dims(capsys):
    assert main(["bench", "--family", "qp"]) == 1
    assert "requires --d and --p" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# solve


@pytest.fixture()
def qp_file(tmp_path):
    path = tmp_path / "qp_d2_p1.json"
    assert main(["bench", "--family", "qp", "--d", "2", "--p", "1",
                 "--seed", "7", "--out", str(path)]) == 0
    return str(path)


def test_solve_success_and_trace(qp_file, tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    rc = main(["solve", qp_file, "--trace-out", str(trace_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "terminated: grad_stop" in out
    with open(trace_path) as fh:
        assert fh.readline().rstrip("\n") == "k,phi_est,grad_norm,primal_obj,inner_iters"
    rows = al.read_trace(str(trace_path))
    assert rows[0]["k"] == 0
    assert rows[-1]["grad_norm"] <= 1e-6


def test_solve_trace_round_trips_17_digits(qp_file, tmp_path):
    trace_path = tmp_path / "trace.csv"
    main(["solve", qp_file, "--trace-out", str(trace_path)])
    pb = al.read_problem(qp_file)
    st = al.OuterSettings(schedule=al.TolSchedule.geometric(1e-4, 0.5))
    trace = al.alm(pb, None, st)
    rows = al.read_trace(str(trace_path))
    assert len(rows) == len(trace.records)
    for row, rec in zip(rows, trace.records):
        assert row["k"] == rec.k
        assert row["phi_est"] == rec.phi_est  # %.17g is lossless for float64
        assert row["grad_norm"] == rec.grad_norm
        assert row["primal_obj"] == rec.primal_obj
        assert row["inner_iters"] == rec.inner_iters


def test_solve_accelerated_method(qp_file):
    assert main(["solve", qp_file, "--method", "accelerated"]) == 0


def test_solve_at_optimum_stops_immediately(qp_file, capsys):
    pb = al.read_problem(qp_file)
    lam0 = ",".join(format(v, ".17g") for v in pb.lambda_star)
    rc = main(["solve", qp_file, "--lam0", lam0, "--inner-tol0", "1e-12"])
    assert rc == 0
    assert "after 1 recorded" in capsys.readouterr().out


def test_solve_budget_exhaustion_exits_2(qp_file):
    rc = main(["solve", qp_file, "--max-outer", "1", "--grad-stop", "1e-15"])
    assert rc == 2


def test_solve_divergence_exits_3(tmp_path, capsys):
    # linear objective pushed the wrong way has an unbounded inner problem
    f = al.CompositeFunction([(al.Linear(np.array([1e6, -2e6])), (0, 2))])
    pb = al.ProblemInstance(f, np.array([[1.0, 1.0]]), np.zeros(1), 1.0,
                            name="runaway")
    path = tmp_path / "runaway.json"
    al.write_problem(pb, str(path))
    rc = main(["solve", str(path)])
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_solve_bad_lam0_exits_1(qp_file, capsys):
    assert main(["solve", qp_file, "--lam0", "1.0;2.0"]) == 1
    assert "lam0" in capsys.readouterr().err


def test_solve_wrong_lam0_length_exits_1(qp_file):
    assert main(["solve", qp_file, "--lam0", "1.0,2.0,3.0"]) == 1


def test_solve_missing_file_exits_1(tmp_path, capsys):
    rc = main(["solve", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_solve_malformed_json_exits_1(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    assert main(["solve", str(path)]) == 1


def test_solve_missing_field_exits_1(tmp_path, capsys):
    path = tmp_path / "incomplete.json"
    path.write_text(json.dumps({"name": "x", "rho": 1.0}))
    assert main(["solve", str(path)]) == 1
    assert "missing field" in capsys.readouterr().err


def test_solve_unknown_atom_kind_exits_1(tmp_path, qp_file):
    with open(qp_file) as fh:
        doc = json.load(fh)
    doc["atoms"][0]["kind"] = "mystery"
    path = tmp_path / "unknown_atom.json"
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path)]) == 1


# ---------------------------------------------------------------------------
# verify


@pytest.fixture()
def tight_file(tmp_path):
    path = tmp_path / "tight.json"
    assert main(["bench", "--family", "tight_bound_family",
                 "--out", str(path)]) == 0
    return str(path)


def test_verify_default_checks_pass(tight_file, tmp_path, capsys):
    report = tmp_path / "report.json"
    rc = main(["verify", tight_file, "--samples", "40",
               "--report-out", str(report)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4  # smoothness, gradient_fd, concavity, invariance
    docs = json.loads(read_bytes(report))
    assert len(docs) == 4
    assert all(doc["pass"] is True for doc in docs)
    assert {doc["check_name"] for doc in docs} == \
        {"smoothness", "gradient_fd", "concavity", "invariance"}


def test_verify_reports_byte_identical(tight_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", tight_file, "--samples", "40", "--seed", "2"]
    assert main(args + ["--report-out", str(a)]) == 0
    assert main(args + ["--report-out", str(b)]) == 0
    assert read_bytes(a) == read_bytes(b)


def test_verify_identity_checks_pass_on_tight(tight_file):
    rc = main(["verify", tight_file, "--checks", "moreau,conjugate"])
    assert rc == 0


def test_verify_coarse_grid_fails_honestly(tight_file, tmp_path, capsys):
    # 5 points per axis cannot resolve the envelope to the 1e-3 budget; the
    # certificate must report the failure and the command must exit 4
    report = tmp_path / "report.json"
    rc = main(["verify", tight_file, "--checks", "moreau", "--grid-points", "5",
               "--report-out", str(report)])
    assert rc == 4
    assert "FAIL" in capsys.readouterr().out
    docs = json.loads(read_bytes(report))
    assert docs[0]["pass"] is False


def test_verify_unknown_check_exits_1(tight_file, capsys):
    assert main(["verify", tight_file, "--checks", "telepathy"]) == 1
    assert "unknown check" in capsys.readouterr().err


def test_verify_empty_checks_exits_1(tight_file):
    assert main(["verify", tight_file, "--checks", " , "]) == 1


def test_verify_moreau_rejects_wide_multiplier(tmp_path):
    path = tmp_path / "wide.json"
    assert main(["bench", "--family", "qp", "--d", "6", "--p", "5",
                 "--out", str(path)]) == 0
    assert main(["verify", str(path), "--checks", "moreau"]) == 1


# ---------------------------------------------------------------------------
# surface plumbing


def test_usage_errors_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    capsys.readouterr()
    assert main([]) == 1
    assert main(["solve"]) == 1


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "solve" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = tmp_path / "cli_smoke.json"
    proc = subprocess.run(
        [sys.executable, "-m", "almlab", "bench", "--family",
         "tight_bound_family", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.exists()
