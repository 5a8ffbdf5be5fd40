import json
import subprocess
import sys

import pytest

from pwareg.cli import bench_sizes, main, read_config
from pwareg.data import read_dataset_csv, read_model_json, write_dataset_csv
from pwareg.regression import Dataset

FOUR = Dataset([[0], [1], [2], [3]], [0, 1, 2, 1])


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    report = json.loads(out) if out.strip() else None
    return code, report, err


@pytest.fixture
def four_csv(tmp_path):
    path = tmp_path / "four.csv"
    write_dataset_csv(FOUR, path)
    return path


def test_fit_four_points(capsys, tmp_path, four_csv):
    out = tmp_path / "model.json"
    code, rep, _ = run(capsys, "fit", "--data", str(four_csv), "--modes", "2", "--out", str(out), "--parallel", "1")
    assert code == 0
    assert rep["best_cost"] == pytest.approx(0, abs=1e-12)
    assert rep["command"][0] == "fit"
    for key in ("wall_time", "iterations", "skipped_degenerate", "certified", "outputs"):
        assert key in rep
    assert read_model_json(out).n == 2
    labeled = (tmp_path / "model.labeled.csv").read_text().splitlines()
    assert labeled[0] == "x1,y,label,yhat" and len(labeled) == 5


def test_fit_parallel_identical_model(capsys, tmp_path):
    path = tmp_path / "g.csv"
    assert main(["gen", "--N", "14", "--dim", "2", "--seed", "4", "--noise", "0.1", "--out", str(path), "--quiet"]) == 0
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["fit", "--data", str(path), "--parallel", "1", "--out", str(a), "--quiet"]) == 0
    assert main(["fit", "--data", str(path), "--parallel", "8", "--out", str(b), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_fit_modes_out_of_range(capsys, four_csv):
    assert run(capsys, "fit", "--data", str(four_csv), "--modes", "3")[0] == 3
    assert run(capsys, "fit", "--data", str(four_csv), "--modes", "1")[0] == 3


def test_fit_bad_input(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1,oops\n")
    assert run(capsys, "fit", "--data", str(bad))[0] == 2
    assert run(capsys, "fit", "--data", str(tmp_path / "missing.csv"))[0] == 2
    assert run(capsys, "fit")[0] == 2


def test_enumerate_reports_bound(capsys, tmp_path):
    path = tmp_path / "ten.csv"
    main(["gen", "--N", "10", "--dim", "2", "--seed", "1", "--out", str(path), "--quiet"])
    labs = tmp_path / "labs.txt"
    code, rep, _ = run(capsys, "enumerate", "--data", str(path), "--out", str(labs))
    assert code == 0
    assert rep["bound"] == 360 and rep["distinct"] <= 360
    lines = labs.read_text().splitlines()
    assert len(lines) == rep["distinct"]
    assert all(set(line.split(",")) <= {"1", "2"} for line in lines)
    _, rep2, _ = run(capsys, "enumerate", "--data", str(path), "--no-dedup")
    assert rep2["yielded"] == rep2["candidates"] == 360
    assert rep2["distinct"] == rep["distinct"]


def test_enumerate_too_few_points(capsys, tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("x1,x2,y\n0,0,1\n1,1,2\n")
    assert run(capsys, "enumerate", "--data", str(path))[0] == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run(capsys, "enumerate", "--data", str(empty))[0] == 2


def test_reduce(capsys, tmp_path):
    gadget = tmp_path / "g.csv"
    code, rep, err = run(capsys, "reduce", "--partition", "1,2,3", "--out", str(gadget))
    assert code == 0 and rep["verdict"] == "yes"
    assert set(rep["witness"]) in ({1, 2}, {3})
    assert "yes" in err
    assert read_dataset_csv(gadget).N == 9
    code, rep, _ = run(capsys, "reduce", "--partition", "1,1,1")
    assert code == 0 and rep["verdict"] == "no" and rep["witness"] is None
    assert run(capsys, "reduce", "--partition", "1,0,2")[0] == 2


def test_oracle(capsys, four_csv, tmp_path):
    code, rep, _ = run(capsys, "oracle", "--data", str(four_csv))
    assert code == 0 and rep["iterations"] == 16
    assert rep["best_cost"] == pytest.approx(0, abs=1e-12)
    big = tmp_path / "big.csv"
    write_dataset_csv(Dataset([[float(i)] for i in range(15)], [0.0] * 15), big)
    assert run(capsys, "oracle", "--data", str(big), "--modes", "3")[0] == 3


def test_gen_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["gen", "--N", "20", "--dim", "2", "--noise", "0.3", "--seed", "9", "--out", str(path), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_then_fit_noiseless(capsys, tmp_path):
    path = tmp_path / "g.csv"
    main(["gen", "--N", "25", "--dim", "2", "--seed", "2", "--out", str(path), "--quiet"])
    code, rep, _ = run(capsys, "fit", "--data", str(path), "--parallel", "1")
    assert code == 0 and rep["best_cost"] <= 1e-9


def test_config_defaults_and_override(capsys, tmp_path, four_csv):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmodes = 3\nparallel = 1\n")
    assert read_config(cfg) == {"modes": "3", "parallel": "1"}
    assert run(capsys, "fit", "--data", str(four_csv), "--config", str(cfg))[0] == 3
    code, rep, _ = run(capsys, "fit", "--data", str(four_csv), "--config", str(cfg), "--modes", "2")
    assert code == 0 and rep["n"] == 2
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "fit", "--data", str(four_csv), "--config", str(cfg))[0] == 2


def test_quiet_prints_nothing(capsys, four_csv):
    code, rep, _ = run(capsys, "fit", "--data", str(four_csv), "--quiet", "--parallel", "1")
    assert code == 0 and rep is None


def test_bench_report_shape():
    rep = bench_sizes(1, [10, 20], repeats=1)
    assert len(rep["seconds"]) == 2 and "slope" in rep


def test_bench_guard(capsys):
    assert run(capsys, "bench", "--dim", "5")[0] == 3


def test_module_entry_point(tmp_path, four_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "pwareg", "fit", "--data", str(four_csv), "--parallel", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["best_cost"] < 1e-12
