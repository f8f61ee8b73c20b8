"""Run every bundled sweep and comparison, writing CSV + SVG.

    python3 scripts/run_all.py [outdir]

Writes into ``results/`` by default.
"""

import sys
from pathlib import Path

from stepwise_driver.cli import main

ROOT = Path(__file__).resolve().parents[1]
RUNS = [
    ("sweep", "sweep_equal"),
    ("sweep", "sweep_double"),
    ("compare", "compare_ratio1"),
    ("compare", "compare_ratio4"),
]


def run(outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for command, name in RUNS:
        code = main([
            command,
            "--config", str(ROOT / "configs" / f"{name}.json"),
            "--out", str(outdir / f"{name}.csv"),
            "--svg", str(outdir / f"{name}.svg"),
        ])
        worst = max(worst, code)
    code = main(["optimize", "--config", str(ROOT / "configs" / "optimize.json")])
    return max(worst, code)


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "results"))
