"""Command-line entry point: ``wmimo run <experiment>`` and ``wmimo validate-config``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, build_config, load_config_file
from .experiments import run_experiment
from .numerics import NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("wmimo")


def parse_list(text: str) -> list[float]:
    """Comma-separated values; ``a:b`` or ``a:b:step`` expands to an inclusive range."""
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [float(b) for b in part.split(":")]
            if len(bits) not in (2, 3):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1.0
            if step <= 0:
                raise argparse.ArgumentTypeError(f"range step must be > 0 in {part!r}")
            n = int((stop - start) / step + 1e-9)
            out.extend(start + i * step for i in range(n + 1))
        else:
            try:
                out.append(float(part))
            except ValueError as exc:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmimo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its CSV")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--m", type=parse_list, help="antenna counts, e.g. 16,32,64 or 16:64:16")
    run.add_argument("--d-rank", dest="d_rank", type=parse_list, help="rank-control values D, e.g. 1:99")
    run.add_argument("--k-factor", dest="k_factor", type=float, help="Ricean K (linear; 'inf' for pure LoS)")
    run.add_argument("--phi", type=float, help="LoS angle of arrival in radians")
    run.add_argument("--phi0", type=parse_list, help="per-user nominal angles in radians (two values)")
    run.add_argument("--spacing", type=float, help="antenna spacing in wavelengths")
    run.add_argument("--spread1-deg", dest="spread1_deg", type=parse_list, help="first-user one-ring spreads, degrees")
    run.add_argument("--spread2-deg", dest="spread2_deg", type=parse_list, help="second-user one-ring spreads, degrees")
    run.add_argument("--scenarios", type=parse_list, help="scenario ids to include")
    run.add_argument("--specs", type=int, help="random spec pairs per M (moment-validate)")
    run.add_argument("--trials", type=int, help="Monte Carlo trials per estimate")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--workers", type=int, help="MC worker threads (default: $WMIMO_WORKERS or 1)")
    run.add_argument("--basis-draws", dest="basis_draws", type=int, help="Haar eigenbases averaged per M (hardening)")
    run.add_argument("--out", help="output CSV path (default: stdout)")

    check = sub.add_parser("validate-config", help="parse a config file and print its canonical form")
    check.add_argument("file")
    return parser


_OVERRIDES = (
    "m", "d_rank", "k_factor", "phi", "phi0", "spacing", "spread1_deg", "spread2_deg",
    "scenarios", "specs", "trials", "seed", "workers", "basis_draws", "out",
)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-config":
            cfg = build_config(file_values=load_config_file(args.file))
            print(cfg.canonical())
            return EXIT_OK

        file_values = load_config_file(args.config) if args.config else {}
        overrides = {name: getattr(args, name) for name in _OVERRIDES}
        cfg = build_config(args.experiment, file_values, overrides)
        log.info("running %s", cfg.experiment)
        result = run_experiment(cfg)
        if cfg.out:
            result.write(cfg.out)
            log.info("wrote %s", cfg.out)
        else:
            sys.stdout.write(result.to_csv())
        return EXIT_OK
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
