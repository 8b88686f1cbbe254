import json

import pytest

from conftest import FIXTURES, small_dataset
from rastair import __version__
from rastair.cli import EXIT_INPUT, EXIT_NOT_CERTIFIED, EXIT_NUMERICAL, EXIT_OK, main
from rastair.io import make_grid_dataset, write
from rastair.metrics import METRIC_HEADER, read_metrics


@pytest.fixture
def small_base(tmp_path):
    path = tmp_path / "base.txt"
    write(make_grid_dataset(side=2, d=3), path)
    return str(path)


def test_generate_is_deterministic(tmp_path, small_base, capsys):
    for name in ("a.txt", "b.txt"):
        assert main(["generate", "--base", small_base, "--agents", "2", "--landmarks", "3", "--seed", "4",
                     "-o", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.gt.txt").read_bytes() == (tmp_path / "b.gt.txt").read_bytes()
    assert "range_edges=" in capsys.readouterr().out


def test_generate_without_ranges(tmp_path, small_base, capsys):
    assert main(["generate", "--base", small_base, "--range-prob", "0", "-o", str(tmp_path / "g.txt")]) == EXIT_OK
    assert "range_edges=0 " in capsys.readouterr().out


def test_solve_then_evaluate_noiseless(tmp_path, capsys):
    data = small_dataset(d=3, noise=False, seed=6)
    write(data.graph, tmp_path / "g.txt", ground_truth=data.ground_truth)
    out = tmp_path / "run"
    assert main(["solve", "-i", str(tmp_path / "g.txt"), "--p0", "3", "--eps", "1e-3", "-o", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "status=certified" in text and "certified_rank=3" in text
    report = json.loads((out / "report.json").read_text())
    assert report["certified"] and report["options"]["eps_ladder"] == [1e-3]
    assert (out / "trace_rank3.csv").exists() and (out / "messages.tsv").exists()

    assert main(["evaluate", "--estimate", str(out / "estimate.txt"), "--ground-truth", str(tmp_path / "g.gt.txt"),
                 "--report", str(out / "report.json"), "-o", str(tmp_path / "m.csv")]) == EXIT_OK
    (row,) = read_metrics(tmp_path / "m.csv")
    assert row["ate_trans_m"] < 1e-6 and row["ate_rot_deg"] < 1e-4
    assert row["eps"] == 1e-3
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == ",".join(METRIC_HEADER)

    assert main(["certify", "-i", str(tmp_path / "g.txt"), "--estimate", str(out / "estimate.txt")]) == EXIT_OK
    assert "verdict=certified" in capsys.readouterr().out


def test_evaluate_identical_files_is_zero(tmp_path, capsys):
    data = small_dataset(d=2, seed=1)
    write(data.graph, tmp_path / "g.txt", ground_truth=data.ground_truth)
    gt = str(tmp_path / "g.gt.txt")
    assert main(["evaluate", "--estimate", gt, "--ground-truth", gt]) == EXIT_OK
    assert "ate_trans_m=0" in capsys.readouterr().out


def test_evaluate_mismatched_ids(tmp_path):
    a = small_dataset(d=2, agents=2, seed=1)
    b = small_dataset(d=2, agents=3, seed=1)
    write(a.graph, tmp_path / "a.txt", ground_truth=a.ground_truth)
    write(b.graph, tmp_path / "b.txt", ground_truth=b.ground_truth)
    assert main(["evaluate", "--estimate", str(tmp_path / "a.gt.txt"),
                 "--ground-truth", str(tmp_path / "b.gt.txt")]) == EXIT_INPUT


def test_missing_input_is_an_input_error(tmp_path, capsys):
    assert main(["solve", "-i", str(tmp_path / "nope.txt")]) == EXIT_INPUT
    assert "nope.txt" in capsys.readouterr().err


def test_unconverged_solve_is_a_numerical_failure(capsys):
    assert main(["solve", "-i", str(FIXTURES / "tiny_grid2d.txt"), "--max-iterations", "3"]) == EXIT_NUMERICAL
    assert "status=not_critical" in capsys.readouterr().out


def test_uncertified_solve_exit_code(tmp_path, capsys):
    # this instance's rank-2 critical point has a clearly negative certificate eigenvalue
    data = small_dataset(d=2, seed=2)
    write(data.graph, tmp_path / "g.txt")
    assert main(["solve", "-i", str(tmp_path / "g.txt"), "--p-max", "2", "--eps", "1e-3"]) == EXIT_NOT_CERTIFIED
    assert "status=not_certified" in capsys.readouterr().out


def test_config_file_overrides_flags(tmp_path, small_base, capsys):
    (tmp_path / "c.cfg").write_text("# study\nrange_prob = 0\nagents=3\n")
    assert main(["generate", "--base", small_base, "--range-prob", "1", "--config", str(tmp_path / "c.cfg"),
                 "-o", str(tmp_path / "g.txt")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "agents=3 " in out and "range_edges=0 " in out
    (tmp_path / "bad.cfg").write_text("frobnicate=1\n")
    assert main(["generate", "--config", str(tmp_path / "bad.cfg"), "-o", str(tmp_path / "h.txt")]) == EXIT_INPUT


def test_bad_flag_value_is_an_input_error(tmp_path):
    assert main(["solve", "-i", str(FIXTURES / "tiny_grid2d.txt"), "--threads", "0"]) == EXIT_INPUT


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out
