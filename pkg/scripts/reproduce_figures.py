"""Run every sweep with its default settings and write one CSV per experiment.

    python3 scripts/reproduce_figures.py --out results/ [--trials 500] [--only hardening]
"""

from __future__ import annotations

import argparse
import logging
import time
from pathlib import Path

from wmimo.config import EXPERIMENTS, build_config, validate
from wmimo.experiments import run_experiment

log = logging.getLogger("reproduce")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--only", choices=EXPERIMENTS, action="append")
    parser.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.only or EXPERIMENTS:
        cfg = build_config(name, overrides={"trials": args.trials, "seed": args.seed})
        validate(cfg)
        start = time.perf_counter()
        result = run_experiment(cfg)
        path = args.out / f"{name}.csv"
        result.write(path)
        log.info("%s: %d rows -> %s (%.1fs)", name, len(result.values), path, time.perf_counter() - start)


if __name__ == "__main__":
    main()
