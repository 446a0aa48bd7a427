"""Regenerate the static test fixtures in this directory.

Runs two small sweeps through the mgtsim command line (the only coupling to
the simulator is its CLI and file formats) and copies the outputs here under
stable names.  The files are committed; rerun this only when the harness's
output formats change, then re-record the golden images.

Usage: python make_fixtures.py
"""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent

CHANNEL_INI = """\
[scenario]
name = channel_1d
n_elements = 120
final_time = 1.4e-5

[sweep]
deltas = 0, 1e-4, 1e-3, 1e-2
snapshot_times = 1.4e-5
parallelism = 2

[output]
dir = {out}
"""

SOURCE_INI = """\
[scenario]
name = source_2d
spacing = 0.05

[sweep]
deltas = 0, 1e-3
snapshot_times = 1.5e-4

[output]
dir = {out}
"""


def run_sweep(ini_text, workdir):
    out = workdir / "out"
    ini = workdir / "sweep.ini"
    ini.write_text(ini_text.format(out=out))
    subprocess.run([sys.executable, "-m", "mgtsim.cli", "sweep", str(ini)], check=True)
    return out


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        ch = tmp / "channel"
        ch.mkdir()
        out = run_sweep(CHANNEL_INI, ch)
        shutil.copy(out / "sweep.csv", HERE / "sweep.csv")
        shutil.copy(out / "rate.json", HERE / "rate.json")
        shutil.copy(out / "snapshot_delta0.0_t1.4e-05.csv", HERE / "profile_delta0.0.csv")
        shutil.copy(out / "snapshot_delta0.01_t1.4e-05.csv", HERE / "profile_delta0.01.csv")

        sq = tmp / "source"
        sq.mkdir()
        out = run_sweep(SOURCE_INI, sq)
        shutil.copy(out / "snapshot_delta0.001_t0.00015.csv", HERE / "field2d.csv")

    for name in sorted(p.name for p in HERE.glob("*.csv")) + ["rate.json"]:
        print("wrote", name)


if __name__ == "__main__":
    main()
