"""The five sweep experiments behind ``wmimo run``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import __version__
from .channel import (
    OneRingConfig,
    block_covariance_scenario,
    check_covariance,
    coupling_scenario,
    make_spec,
    one_ring_covariance,
    ones_matrix,
    random_spec,
)
from .config import ExperimentConfig
from .moments import SCALING_METRICS, cross_moment, fit_exponent, fourth_moment, second_moment, trace_interference
from .montecarlo import estimate_all_moments, hardening_trace
from .sweep import SweepResult


def _metadata(cfg: ExperimentConfig) -> dict:
    echo = cfg.to_dict()
    echo.pop("out")
    return {"config": echo, "seed": cfg.seed, "version": __version__}


def run_hardening(cfg: ExperimentConfig) -> SweepResult:
    """Var(||h||^2)/M^2 against M for each coupling scenario, closed form and MC."""
    columns: dict[str, list] = {}
    for s in cfg.scenarios:
        trace = hardening_trace(s, cfg.k_factor, cfg.m, cfg.mc, cfg.basis_draws, phi=cfg.phi, d=cfg.spacing)
        for name, col in trace.columns.items():
            columns[f"scenario{s}_{name}"] = col
    return SweepResult("m", list(cfg.m), columns, _metadata(cfg))


def block_interference(scenario: int, m: int, d_rank: int) -> float:
    """tr(Q1 Q2)/M^2 with Q2 the all-ones matrix."""
    q1 = block_covariance_scenario(scenario, m, d_rank)
    return trace_interference(q1, ones_matrix(m)).value / m**2


def run_block_interference(cfg: ExperimentConfig) -> SweepResult:
    m = cfg.m[0]
    columns = {f"scenario{s}": [block_interference(s, m, d) for d in cfg.d_rank] for s in cfg.scenarios}
    return SweepResult("d_rank", list(cfg.d_rank), columns, _metadata(cfg))


def run_one_ring_interference(cfg: ExperimentConfig) -> SweepResult:
    """tr(Q1 Q2)/M against the second user's spread, one column per first-user spread."""
    m = cfg.m[0]
    phi1, phi2 = cfg.phi0

    def cov(spread_deg: float, phi0: float):
        q = one_ring_covariance(OneRingConfig(m, math.radians(spread_deg), phi0, cfg.spacing))
        check_covariance(q)
        return q

    second = [cov(s, phi2) for s in cfg.spread2_deg]
    columns = {}
    for s1 in cfg.spread1_deg:
        q1 = cov(s1, phi1)
        columns[f"spread1_{s1:g}deg"] = [trace_interference(q1.q, q2.q).value / m for q2 in second]
    return SweepResult("spread2_deg", list(cfg.spread2_deg), columns, _metadata(cfg))


def run_moment_validate(cfg: ExperimentConfig) -> SweepResult:
    """Closed-form moments against Monte Carlo for random spec pairs, one row per metric."""
    rows: dict[str, list] = {k: [] for k in ("m", "spec", "metric", "closed_form", "monte_carlo", "std_error", "z")}
    for m in cfg.m:
        for i in range(cfg.specs):
            rng = np.random.default_rng(cfg.mc.child(m, i).seed)
            spec_k = random_spec(m, rng, cfg.k_range, cfg.spacing)
            spec_l = random_spec(m, rng, cfg.k_range, cfg.spacing)
            est = estimate_all_moments(spec_k, spec_l, cfg.mc.child(m, i, 1))
            exact = {"m2": second_moment(spec_k), "m4": fourth_moment(spec_k), "cross": cross_moment(spec_k, spec_l)}
            for metric, value in exact.items():
                e = est[metric]
                rows["m"].append(m)
                rows["spec"].append(i)
                rows["metric"].append(metric)
                rows["closed_form"].append(value)
                rows["monte_carlo"].append(float(e.mean))
                rows["std_error"].append(e.std_error)
                rows["z"].append(e.z_score(value))
    n = len(rows["z"])
    return SweepResult("row", list(range(n)), rows, _metadata(cfg))


def run_scaling_diagnostic(cfg: ExperimentConfig) -> SweepResult:
    """Growth of the boundedness quantities with M, with fitted exponents."""
    ms = sorted(set(cfg.m))
    columns: dict[str, list] = {}
    for s in cfg.scenarios:
        pairs = {}
        for m in ms:
            rng = np.random.default_rng(cfg.mc.child(s, m).seed)
            omega = coupling_scenario(s, m)
            spec_k = make_spec(m, cfg.k_factor, omega, rng=rng, phi=cfg.phi0[0], d=cfg.spacing)
            spec_l = make_spec(m, cfg.k_factor, omega, rng=rng, phi=cfg.phi0[1], d=cfg.spacing)
            pairs[m] = (spec_k, spec_l)
        for metric, fn in SCALING_METRICS.items():
            columns[f"scenario{s}_{metric}"] = [fn(pairs[m]) for m in ms]
    meta = _metadata(cfg)
    meta["exponents"] = {name: fit_exponent(ms, col) for name, col in columns.items()}
    return SweepResult("m", ms, columns, meta)


RUNNERS: dict[str, Callable[[ExperimentConfig], SweepResult]] = {
    "hardening": run_hardening,
    "block-interference": run_block_interference,
    "one-ring-interference": run_one_ring_interference,
    "moment-validate": run_moment_validate,
    "scaling-diagnostic": run_scaling_diagnostic,
}


def run_experiment(cfg: ExperimentConfig) -> SweepResult:
    return RUNNERS[cfg.experiment](cfg)
