"""Command line entry point: render figures from spec files.

Usage: plotkit SPEC [SPEC ...]

Each SPEC is a JSON figure spec (see figures.FigureSpec); relative paths in
a spec resolve against the spec file's own directory.  Files that fail to
load or render are reported on stderr and the exit status is 1, but the
remaining specs still run.
"""

import argparse
import sys

from .figures import KINDS, load_figure_spec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render figures (kinds: %s) from sweep harness CSV/JSON outputs."
        % ", ".join(KINDS),
    )
    parser.add_argument("specs", nargs="+", metavar="SPEC", help="figure spec JSON file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    status = 0
    for spec_path in args.specs:
        try:
            out = render(load_figure_spec(spec_path))
        except (OSError, ValueError) as exc:
            print(f"plotkit: {spec_path}: {exc}", file=sys.stderr)
            status = 1
            continue
        print(f"wrote {out}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
