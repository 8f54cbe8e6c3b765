"""Seeded, parallel Monte Carlo estimation of channel moments.

Each worker owns an independent ``numpy`` generator spawned from
``SeedSequence(seed)``; per-trial statistics are reduced into shifted power sums
and merged in worker order, so a fixed (trials, seed, workers) triple reproduces
bit-identical estimates regardless of thread scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import UserChannelSpec, coupling_scenario, make_spec, sample_channel
from .moments import fp_variance, hardening_variance
from .sweep import SweepResult

WORKERS_ENV = "WMIMO_WORKERS"
BATCH_ELEMENTS = 1 << 19


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from exc
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return n


@dataclass(frozen=True)
class McConfig:
    trials: int = 100_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def child(self, *key: int) -> McConfig:
        """Config with a seed derived deterministically from (seed, *key)."""
        state = np.random.SeedSequence([self.seed, *key]).generate_state(2, dtype=np.uint32)
        return McConfig(self.trials, int(state[0]) | (int(state[1]) << 32), self.workers)

    def worker_trials(self) -> list[int]:
        base, extra = divmod(self.trials, self.workers)
        return [base + (w < extra) for w in range(self.workers)]


@dataclass(frozen=True)
class McEstimate:
    mean: float | complex
    std_error: float
    trials: int

    def z_score(self, exact: float) -> float:
        """(mean - exact) / std_error; 0 for an exact hit with zero spread."""
        diff = float(np.real(self.mean)) - exact
        if self.std_error > 0:
            return diff / self.std_error
        if abs(diff) <= 1e-9 * max(1.0, abs(exact)):
            return 0.0
        return math.copysign(math.inf, diff)


class PowerSums:
    """Sums of (x - c)^p, p = 1..4, about a fixed shift c (the first sample).

    Shifting by an observed sample keeps the sums exactly zero for constant data.
    """

    def __init__(self) -> None:
        self.n = 0
        self.shift = 0.0
        self.sums = np.zeros(4)

    def add(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return
        if self.n == 0:
            self.shift = float(x[0])
        d = x - self.shift
        d2 = d * d
        self.sums += (d.sum(), d2.sum(), (d2 * d).sum(), (d2 * d2).sum())
        self.n += x.size

    def recentered(self, shift: float) -> np.ndarray:
        """Power sums about a different shift (binomial expansion)."""
        if self.n == 0 or shift == self.shift:
            return self.sums.copy()
        delta = self.shift - shift
        s0 = float(self.n)
        s1, s2, s3, s4 = self.sums
        return np.array([
            s1 + s0 * delta,
            s2 + 2 * delta * s1 + s0 * delta**2,
            s3 + 3 * delta * s2 + 3 * delta**2 * s1 + s0 * delta**3,
            s4 + 4 * delta * s3 + 6 * delta**2 * s2 + 4 * delta**3 * s1 + s0 * delta**4,
        ])

    @classmethod
    def merge(cls, parts: Sequence[PowerSums]) -> PowerSums:
        out = cls()
        parts = [p for p in parts if p.n > 0]
        if not parts:
            return out
        out.shift = parts[0].shift
        out.n = sum(p.n for p in parts)
        out.sums = parts[0].sums.copy()
        for p in parts[1:]:
            out.sums = out.sums + p.recentered(out.shift)
        return out

    def central(self) -> tuple[float, float, float]:
        """(mean, second, fourth) central moments (biased, 1/n)."""
        n = self.n
        s1, s2, s3, s4 = self.sums / n
        mu = s1
        m2 = s2 - mu * mu
        m4 = s4 - 4 * mu * s3 + 6 * mu * mu * s2 - 3 * mu**4
        return float(self.shift + mu), float(max(m2, 0.0)), float(max(m4, 0.0))

    def mean_estimate(self) -> McEstimate:
        n = self.n
        mean, m2, _ = self.central()
        var = m2 * n / (n - 1) if n > 1 else 0.0
        return McEstimate(mean, math.sqrt(var / n), n)

    def variance_estimate(self) -> McEstimate:
        """Unbiased sample variance with a delta-method standard error."""
        n = self.n
        _, m2, m4 = self.central()
        var = m2 * n / (n - 1) if n > 1 else 0.0
        return McEstimate(var, math.sqrt(max(m4 - m2 * m2, 0.0) / n), n)


Statistic = Callable[[np.random.Generator, int], dict[str, np.ndarray]]


def run_trials(draw: Statistic, cfg: McConfig, width: int = 1) -> dict[str, PowerSums]:
    """Run ``cfg.trials`` draws split over workers; return merged power sums per statistic.

    ``draw(rng, n)`` returns a dict of real arrays of length n (one value per
    trial); ``width`` (values drawn per trial, e.g. M) only sets the batch size.
    """
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.workers)
    counts = cfg.worker_trials()
    batch = max(1, BATCH_ELEMENTS // max(1, width))

    def work(w: int) -> dict[str, PowerSums]:
        rng = np.random.default_rng(seeds[w])
        acc: dict[str, PowerSums] = {}
        left = counts[w]
        while left > 0:
            n = min(batch, left)
            for name, values in draw(rng, n).items():
                acc.setdefault(name, PowerSums()).add(values)
            left -= n
        return acc

    if cfg.workers == 1:
        results = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, range(cfg.workers)))
    names = dict.fromkeys(name for r in results for name in r)
    return {name: PowerSums.merge([r[name] for r in results if name in r]) for name in names}


def _gain_draw(spec: UserChannelSpec) -> Statistic:
    def draw(rng, n):
        h = sample_channel(spec, rng, n)
        g = np.sum(h.real**2 + h.imag**2, axis=1)
        return {"m2": g, "m4": g * g}

    return draw


def _pair_draw(spec_k: UserChannelSpec, spec_l: UserChannelSpec) -> Statistic:
    if spec_k.m != spec_l.m:
        raise ValueError(f"antenna count mismatch: {spec_k.m} vs {spec_l.m}")

    def draw(rng, n):
        hk = sample_channel(spec_k, rng, n)
        hl = sample_channel(spec_l, rng, n)
        g = np.sum(hk.real**2 + hk.imag**2, axis=1)
        x = np.sum(hk.conj() * hl, axis=1)
        p = x.real**2 + x.imag**2
        return {"m2": g, "m4": g * g, "cross": p, "inner_re": x.real, "inner_im": x.imag}

    return draw


def estimate_gain_moments(spec: UserChannelSpec, cfg: McConfig) -> tuple[McEstimate, McEstimate]:
    """Sample means of ||h||^2 and ||h||^4."""
    acc = run_trials(_gain_draw(spec), cfg, spec.m)
    return acc["m2"].mean_estimate(), acc["m4"].mean_estimate()


def estimate_cross_moment(spec_k: UserChannelSpec, spec_l: UserChannelSpec, cfg: McConfig) -> McEstimate:
    """Sample mean of |h_k^H h_l|^2 over independent draws of both users."""
    return run_trials(_pair_draw(spec_k, spec_l), cfg, 2 * spec_k.m)["cross"].mean_estimate()


def estimate_all_moments(spec_k: UserChannelSpec, spec_l: UserChannelSpec, cfg: McConfig) -> dict[str, McEstimate]:
    """E||h_k||^2, E||h_k||^4 and E|h_k^H h_l|^2 from one shared run."""
    acc = run_trials(_pair_draw(spec_k, spec_l), cfg, 2 * spec_k.m)
    return {name: acc[name].mean_estimate() for name in ("m2", "m4", "cross")}


def estimate_gain_variance(spec: UserChannelSpec, cfg: McConfig) -> McEstimate:
    """Sample variance of ||h||^2 / M."""
    draw = _gain_draw(spec)
    acc = run_trials(lambda rng, n: {"g": draw(rng, n)["m2"] / spec.m}, cfg, spec.m)
    return acc["g"].variance_estimate()


def hardening_trace(
    scenario: int,
    k_factor: float,
    m_values: Sequence[int],
    cfg: McConfig,
    basis_draws: int = 32,
    *,
    phi: float = math.pi / 3,
    d: float = 0.5,
) -> SweepResult:
    """Var(||h||^2)/M^2 against M, averaged over ``basis_draws`` Haar eigenbases.

    Emits the closed form and the Monte Carlo estimate (with its standard error)
    for each M; both are averaged over the same drawn bases.
    """
    if basis_draws < 1:
        raise ValueError("basis_draws must be >= 1")
    closed, mc, se = [], [], []
    for i, m in enumerate(m_values):
        rng = np.random.default_rng(cfg.child(scenario, m, i).seed)
        omega = coupling_scenario(scenario, m)
        cf, est, err2 = 0.0, 0.0, 0.0
        for b in range(basis_draws):
            spec = make_spec(m, k_factor, omega, rng=rng, phi=phi, d=d)
            cf += hardening_variance(spec).variance
            e = estimate_gain_variance(spec, cfg.child(scenario, m, i, b))
            est += float(e.mean)
            err2 += e.std_error**2
        closed.append(cf / basis_draws)
        mc.append(est / basis_draws)
        se.append(math.sqrt(err2) / basis_draws)
    return SweepResult(
        axis="m",
        values=list(m_values),
        columns={"closed_form": closed, "monte_carlo": mc, "std_error": se},
        metadata={"scenario": scenario, "k_factor": k_factor, "basis_draws": basis_draws},
    )


def fp_trace(
    template_k: Callable[[int, np.random.Generator], UserChannelSpec],
    template_l: Callable[[int, np.random.Generator], UserChannelSpec],
    m_values: Sequence[int],
    cfg: McConfig,
) -> SweepResult:
    """Per M: MC statistics of x = h_k^H h_l / M next to the closed-form E|x|^2.

    ``template(m, rng)`` builds a user spec for a given antenna count.
    """
    cols: dict[str, list[float]] = {
        "closed_form": [], "mc_second_moment": [], "std_error": [], "mc_mean_abs": [], "mc_centered_variance": [],
    }
    for i, m in enumerate(m_values):
        rng = np.random.default_rng(cfg.child(m, i).seed)
        spec_k = template_k(m, rng)
        spec_l = template_l(m, rng)
        acc = run_trials(_pair_draw(spec_k, spec_l), cfg.child(m, i, 1), 2 * m)
        second = acc["cross"].mean_estimate()
        re = acc["inner_re"].mean_estimate()
        im = acc["inner_im"].mean_estimate()
        centered = acc["inner_re"].variance_estimate().mean + acc["inner_im"].variance_estimate().mean
        cols["closed_form"].append(fp_variance(spec_k, spec_l).variance)
        cols["mc_second_moment"].append(float(second.mean) / m**2)
        cols["std_error"].append(second.std_error / m**2)
        cols["mc_mean_abs"].append(abs(complex(float(re.mean), float(im.mean))) / m)
        cols["mc_centered_variance"].append(float(centered) / m**2)
    return SweepResult(axis="m", values=list(m_values), columns=cols, metadata={})
