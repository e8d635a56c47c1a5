import csv
import json

import pytest

from flimks.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, PHASE_HEADER, main


def write_config(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_certify_reference_case(tmp_path):
    config = write_config(tmp_path, "problem.n = 2\nproblem.chi = 2\nproblem.m = 0.5\n")
    out = tmp_path / "out"
    assert main(["certify", "--config", config, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "cert_report.json").read_text())
    assert report["verdict"] == "PASS"
    with (out / "constraints.csv").open() as handle:
        rows = list(csv.DictReader(handle))
    assert rows and all(row["satisfied"] == "true" for row in rows)
    assert (out / "flimks.log").exists()


def test_certify_infeasible_case(tmp_path):
    config = write_config(tmp_path, "problem.n = 1\nproblem.chi = 2\nproblem.m = 1\n")
    out = tmp_path / "out"
    assert main(["certify", "--config", config, "--out", str(out)]) == EXIT_INFEASIBLE
    report = json.loads((out / "feasibility.json").read_text())
    assert report["feasible"] is False
    assert report["reason"].startswith("m/omega_1 <= m_c")
    assert not (out / "cert_report.json").exists()


def test_bad_config_is_usage_error(tmp_path):
    config = write_config(tmp_path, "problem.n = 2\nproblem.chi = lots\n")
    assert main(["certify", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_missing_arguments_is_usage_error(tmp_path):
    assert main(["run", "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_run_writes_report_and_trace(tmp_path):
    config = write_config(tmp_path, "problem.n = 1\nproblem.chi = 2\nproblem.m = 0.4\n"
                                    "solver.s_nodes = 32\nsolver.t_end = 0.01\ninit.mode = uniform\n"
                                    "init.perturbation = 0.2\n")
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "run_report.json").read_text())
    assert report["outcome"] == "bounded_at_horizon"
    assert report["T_ext"] is None
    with (out / "trace.csv").open() as handle:
        header = next(csv.reader(handle))
    assert header == ["t", "sup_u", "min_defect", "mass", "dt"]


def test_run_threshold_needs_feasible_case(tmp_path):
    config = write_config(tmp_path, "problem.n = 2\nproblem.chi = 0.5\nproblem.m = 0.5\ninit.mode = threshold\n")
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_INFEASIBLE
    assert (out / "constraints.csv").exists()


SWEEP = ("problem.n = 1\nsolver.s_nodes = 32\nsolver.t_end = 0.01\n"
         "sweep.chi = 2.0, 0.8\nsweep.m = 0.4, 2.0\n")


def test_sweep_table_is_sorted_and_deterministic(tmp_path):
    config = write_config(tmp_path, SWEEP)
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", config, "--out", str(first)]) == EXIT_OK
    assert main(["sweep", "--config", config, "--out", str(second)]) == EXIT_OK
    table = (first / "phase_table.csv").read_bytes()
    assert table == (second / "phase_table.csv").read_bytes()

    rows = list(csv.reader(table.decode().splitlines()))
    assert rows[0] == PHASE_HEADER
    assert [(row[2], row[3]) for row in rows[1:]] == [("0.8", "0.4"), ("0.8", "2"), ("2", "0.4"), ("2", "2")]
    feasible = {(row[2], row[3]): row[4] for row in rows[1:]}
    assert feasible[("2", "2")] == "true"
    assert feasible[("0.8", "2")] == "false"


@pytest.mark.slow
def test_sweep_workers_do_not_change_table(tmp_path):
    config = write_config(tmp_path, SWEEP)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["sweep", "--config", config, "--out", str(serial)]) == EXIT_OK
    assert main(["sweep", "--config", config, "--out", str(parallel), "--workers", "2"]) == EXIT_OK
    assert (serial / "phase_table.csv").read_bytes() == (parallel / "phase_table.csv").read_bytes()


def test_sweep_rejects_threshold_data(tmp_path):
    config = write_config(tmp_path, SWEEP + "init.mode = threshold\n")
    assert main(["sweep", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_sweep_needs_mass_values(tmp_path):
    config = write_config(tmp_path, "problem.n = 2\nsweep.chi = 0.5, 2.0\n")
    assert main(["sweep", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_failed_sweep_leaves_no_table(tmp_path):
    (tmp_path / "data.csv").write_text("r,u\n0.0,1.0\n0.5,-1.0\n1.0,1.0\n")
    config = write_config(tmp_path, "problem.n = 1\nsolver.s_nodes = 32\nsolver.t_end = 0.01\n"
                                    "sweep.chi = 2.0\nsweep.m = 2.0\n"
                                    "init.mode = profile\ninit.profile = data.csv\n")
    out = tmp_path / "out"
    assert main(["sweep", "--config", config, "--out", str(out)]) == EXIT_USAGE
    assert not (out / "phase_table.csv").exists()
