"""plot --run <dir> --out <dir> [--fig overhead|deviation|profiles|laptimes]"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from .artifacts import ArtifactError, load_run
from .figures import BUILDERS, FIGURES


def plot_run(run_dir: Path | str, out_dir: Path | str, which: list[str] | None = None) -> list[Path]:
    run = load_run(run_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in which or FIGURES:
        fig = BUILDERS[name](run)
        target = out_dir / f"{name}.svg"
        # fixed hash salt and no date so reruns give identical files
        with plt.rc_context({"svg.hashsalt": "racing"}):
            fig.savefig(target, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(target)
    return written


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="plot", description="Figures from a racing run directory")
    ap.add_argument("--run", required=True, help="run directory written by racing optimize")
    ap.add_argument("--out", required=True, help="directory for the SVG files")
    ap.add_argument("--fig", choices=FIGURES, action="append",
                    help="figure to render, repeatable (default: all)")
    args = ap.parse_args(argv)
    try:
        for f in plot_run(args.run, args.out, args.fig):
            print(f"wrote {f}")
    except ArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
