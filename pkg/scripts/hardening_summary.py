"""Print closed-form and Monte Carlo hardening variances side by side.

    python3 scripts/hardening_summary.py [--k 0.5] [--m 16,32,64] [--trials 2000]
"""

from __future__ import annotations

import argparse

from wmimo.cli import parse_list
from wmimo.montecarlo import McConfig, hardening_trace


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--k", type=float, default=0.5)
    parser.add_argument("--m", default="16,32,64,128")
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--basis-draws", type=int, default=8)
    args = parser.parse_args()

    m_values = [int(x) for x in parse_list(args.m)]
    cfg = McConfig(trials=args.trials, seed=args.seed)
    print(f"{'scenario':>8} {'M':>5} {'closed form':>12} {'monte carlo':>12} {'z':>7}")
    for s in (1, 2, 3):
        trace = hardening_trace(s, args.k, m_values, cfg, args.basis_draws)
        cols = trace.columns
        for m, cf, mc, se in zip(m_values, cols["closed_form"], cols["monte_carlo"], cols["std_error"]):
            z = (mc - cf) / se if se > 0 else 0.0
            print(f"{s:>8} {m:>5} {cf:12.6f} {mc:12.6f} {z:7.2f}")


if __name__ == "__main__":
    main()
