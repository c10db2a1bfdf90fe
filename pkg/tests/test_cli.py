import json
import subprocess
import sys

import pytest

from ofjdar.bench import RESULTS_COLUMNS, load_results
from ofjdar.cli import main
from ofjdar.dataset import load_domain


@pytest.fixture
def domains(tmp_path):
    out = tmp_path / "domains"
    assert main(["generate", "--out-dir", str(out), "--n-domains", "2", "--shift", "0.5",
                 "--label-stop", "15"]) == 0
    return out / "D0.csv", out / "D1.csv"


def test_generate_writes_loadable_domains(domains):
    d0, d1 = (load_domain(p) for p in domains)
    assert len(d0) == len(d1) == 30
    assert d0.n_features == 20
    assert (d0.features != d1.features).any()


def test_run_writes_reports(domains, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--source", str(domains[0]), "--target", str(domains[1]),
                 "--method", "CTD", "--delta-n", "5", "--noise", "5", "--seed", "1",
                 "--out", str(out)])
    assert code == 0
    assert "rmse=" in capsys.readouterr().out
    rows = load_results(out / "results.csv").rows
    assert len(rows) == 1 and rows[0].ok and rows[0].noise == 5.0
    assert len((out / "curves.csv").read_text().splitlines()) == 1 + 25


def test_matrix_and_report(domains, tmp_path, capsys):
    config = {
        "domains": [{"name": "A", "path": str(domains[0])}, {"name": "B", "path": str(domains[1])}],
        "methods": ["OSD", "OTD", "CTD"],
        "delta_ns": [5, 10],
        "noise_levels": [0],
        "seeds": [0, 1],
    }
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "matrix"
    assert main(["matrix", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header == ",".join(RESULTS_COLUMNS)
    assert len(load_results(out / "results.csv").rows) == 2 * 3 * 2 * 2
    capsys.readouterr()
    summary = tmp_path / "again.csv"
    assert main(["report", "--results", str(out / "results.csv"), "--summary", str(summary)]) == 0
    assert summary.read_text() == (out / "summary.csv").read_text()
    assert "median" in capsys.readouterr().out


def test_failed_cells_give_nonzero_exit(tmp_path, domains):
    config = {"domains": [{"name": "A", "path": str(domains[0])},
                          {"name": "gone", "path": str(tmp_path / "gone.csv")}],
              "methods": ["OSD"], "delta_ns": [5], "noise_levels": [0]}
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(config))
    assert main(["matrix", "--config", str(cfg), "--out", str(tmp_path / "m"), "--quiet"]) == 1
    assert main(["report", "--results", str(tmp_path / "m" / "results.csv")]) == 1


def test_bad_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("feature_1,label\nabc,1.0\n")
    code = main(["run", "--source", str(bad), "--target", str(bad), "--method", "OSD",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ofjdar.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("generate", "run", "matrix", "report"):
        assert sub in proc.stdout
