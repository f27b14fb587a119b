"""Run every CLI experiment against a config and collect the outputs.

    python3 scripts/run_experiments.py --config configs/reference.json --out results/
"""
import argparse
import sys
from pathlib import Path

from fiberpair.cli import main


def commands(config: Path, out: Path, seed: int, workers: int, g2_pulses: int | None = None) -> list[list[str]]:
    common = ["--config", str(config), "--workers", str(workers)]
    g2_extra = ["--pulses", str(g2_pulses)] if g2_pulses else []
    return [
        ["budget", *common, "--out", str(out / "budget")],
        ["g2-sweep", *common, "--seed", str(seed), "--out", str(out / "g2"),
         "--powers", "0.05,0.1,0.2,0.3,0.5", *g2_extra],
        ["tomo", *common, "--seed", str(seed), "--out", str(out / "tomo")],
        ["hom", *common, "--seed", str(seed), "--out", str(out / "hom")],
    ]


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, default=Path("configs/reference.json"))
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=20100101)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--g2-pulses", type=int, help="pulses per pump power (default from config)")
    args = ap.parse_args()
    for argv in commands(args.config, args.out, args.seed, args.workers, args.g2_pulses):
        print("$ fiberpair", " ".join(argv), flush=True)
        code = main(argv)
        if code:
            sys.exit(code)
