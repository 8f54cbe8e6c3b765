"""Exit criteria, one test per criterion; each prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from wmimo.channel import OneRingConfig, check_covariance, make_spec, one_ring_covariance, random_spec
from wmimo.config import EXPERIMENTS, build_config
from wmimo.experiments import run_experiment
from wmimo.moments import coupling_is_near_equal, fourth_moment, hardening_variance, trace_interference
from wmimo.numerics import haar_unitary
from wmimo.sweep import SweepResult

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


class DefaultRuns:
    """First default-config run of each experiment, shared between criteria."""

    def __init__(self):
        self.csv: dict[str, str] = {}
        self.seconds: dict[str, float] = {}

    def get(self, experiment: str) -> str:
        if experiment not in self.csv:
            start = time.perf_counter()
            self.csv[experiment] = run_experiment(build_config(experiment)).to_csv()
            self.seconds[experiment] = time.perf_counter() - start
        return self.csv[experiment]


@pytest.fixture(scope="module")
def default_runs():
    return DefaultRuns()


def test_c1_moment_oracle_equivalence(default_runs):
    res = SweepResult.from_csv(default_runs.get("moment-validate"))
    cfg = res.metadata["config"]
    assert cfg["m"] == [16] and cfg["specs"] == 50 and cfg["trials"] == 1_000_000
    assert cfg["k_range"] == [0.0, 10.0]
    z = np.array(res.columns["z"])
    frac = float(np.mean(np.abs(z) <= 5))
    elapsed = default_runs.seconds["moment-validate"]
    ok = frac >= 0.98 and elapsed < 300
    report("C1 moment-oracle equivalence", ok, f"{frac:.1%} of {z.size} |z|<=5 (max |z| {np.max(np.abs(z)):.2f}), {elapsed:.0f}s")
    assert ok


def test_c2_proposition_consistency():
    rng = np.random.default_rng(2)
    specs = [random_spec(16, rng) for _ in range(1000)]
    start = time.perf_counter()
    worst = 0.0
    for spec in specs:
        m = spec.m
        lhs = hardening_variance(spec).variance * m * m + m * m
        rhs = fourth_moment(spec)
        worst = max(worst, abs(lhs - rhs) / rhs)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    report("C2 proposition consistency", ok, f"max rel err {worst:.1e} over 1000 specs, {elapsed:.2f}s")
    assert ok


def test_c3_known_cases():
    rng = np.random.default_rng(3)
    errs = []
    for m in (4, 16, 100):
        spec = make_spec(m, math.inf, rng.dirichlet(np.ones(m)) * m, rng=rng)
        assert hardening_variance(spec).variance == 0.0
        for k in (0.0, 0.5, 4.0):
            spec = make_spec(m, k, np.ones(m), rng=rng, phi=1.1)
            want = spec.gamma**2 * (1 + spec.eta**2) / m
            errs.append(abs(hardening_variance(spec).variance - want) / want)
        iid = make_spec(m, 0.0, np.ones(m), eigenbasis=np.eye(m))
        errs.append(abs(fourth_moment(iid) - (m * m + m)) / (m * m + m))
    ok = max(errs) <= 1e-12
    report("C3 known-case exactness", ok, f"gamma=0 exact zero; max rel err {max(errs):.1e}")
    assert ok


def test_c4_hardening_figure():
    ms = [16, 32, 64, 128, 256]
    cfg = build_config("hardening", overrides={"m": ms})
    assert cfg.k_factor == 0.5 and abs(cfg.phi - math.pi / 3) < 1e-15 and cfg.spacing == 0.5 and cfg.basis_draws == 32
    start = time.perf_counter()
    res = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    col = res.columns
    gamma4 = (1 / 1.5) ** 2
    s1_err = max(abs(v - 8 / (9 * m)) for v, m in zip(col["scenario1_closed_form"], ms))
    s3 = col["scenario3_closed_form"][-1]
    s2 = col["scenario2_closed_form"][-1]
    s2_target = gamma4 * (0.25 + 1 / (4 * (256 - 1)))
    worst_z = max(
        abs(mc - cf) / se
        for s in (1, 2, 3)
        for cf, mc, se in zip(col[f"scenario{s}_closed_form"], col[f"scenario{s}_monte_carlo"], col[f"scenario{s}_std_error"])
    )
    ok = (
        s1_err <= 1e-9
        and abs(s3 - 4 / 9) <= 0.15 * 4 / 9
        and abs(s2 - s2_target) <= 0.15 * s2_target
        and worst_z <= 5
        and elapsed < 600
    )
    report(
        "C4 hardening figure",
        ok,
        f"S1 err {s1_err:.1e}; S3@256 {s3:.4f} (4/9); S2@256 {s2:.4f} ({s2_target:.4f}); max MC z {worst_z:.2f}; {elapsed:.0f}s",
    )
    assert ok


def test_c5_block_interference_figure():
    m = 100
    start = time.perf_counter()
    res = run_experiment(build_config("block-interference"))
    elapsed = time.perf_counter() - start
    d = np.array(res.values)
    assert list(d) == list(range(1, 100))
    s1 = np.array(res.columns["scenario1"])
    s2 = np.array(res.columns["scenario2"])
    e1 = np.max(np.abs(s1 - ((m - d) ** 2 + d) / m**2))
    e2 = np.max(np.abs(s2 - (d * (m - d) + (m - d)) / m**2))
    monotone = bool(np.all(np.diff(s1[: m - 2]) < 0))
    ok = e1 <= 1e-12 and e2 <= 1e-12 and monotone and elapsed < 10
    report("C5 block interference figure", ok, f"errs {e1:.1e}/{e2:.1e}, S1 decreasing over D<=98: {monotone}, {elapsed:.2f}s")
    assert ok


def _one_ring(default_runs):
    return SweepResult.from_csv(default_runs.get("one-ring-interference"))


def test_c6a_low_spread_boost(default_runs):
    res = _one_ring(default_runs)
    i = res.values.index(1.0)
    both_small = res.columns["spread1_1deg"][i]
    mixed = res.columns["spread1_40deg"][i]
    ok = both_small >= 5 * mixed
    report("C6a one-ring low-spread boost", ok, f"{both_small:.3f} vs {mixed:.3f} (ratio {both_small / mixed:.1f}, need >= 5)")
    assert ok


def test_c6b_large_spread_rise(default_runs):
    res = _one_ring(default_runs)
    pts = [(s, v) for s, v in zip(res.values, res.columns["spread1_40deg"]) if 20 <= s <= 60]
    vals = np.array([v for _, v in pts])
    drops = [(pts[j][0], pts[j + 1][0]) for j in range(len(pts) - 1) if vals[j + 1] < vals[j]]
    ok = not drops
    detail = "non-decreasing over [20, 60] deg" if ok else (
        f"decreases on {len(drops)} steps, first {drops[0][0]:g}->{drops[0][1]:g} deg "
        f"(peak {vals.max():.3f} at {pts[int(np.argmax(vals))][0]:g} deg)"
    )
    report("C6b one-ring rise for dphi1=40deg", ok, detail)
    assert ok


def test_c6c_one_ring_matrices_valid(default_runs):
    start = time.perf_counter()
    _one_ring(default_runs)  # the run itself checks every matrix it builds
    cfg = build_config("one-ring-interference")
    checked = 0
    for spread in (*cfg.spread1_deg, 1.0, 20.0, 40.0, 60.0):
        for phi0 in cfg.phi0:
            check_covariance(one_ring_covariance(OneRingConfig(100, math.radians(spread), phi0, 0.5)))
            checked += 1
    elapsed = default_runs.seconds["one-ring-interference"] + time.perf_counter() - start
    ok = elapsed < 120
    report("C6c one-ring matrices valid", ok, f"Hermitian/PSD/unit-diagonal on {checked} extra + all sweep matrices, {elapsed:.0f}s")
    assert ok


def test_c7_bound_suite():
    rng = np.random.default_rng(7)
    m = 32
    near_equal = 0
    worst_upper = -np.inf
    for _ in range(100):
        covs = [
            one_ring_covariance(OneRingConfig(m, math.radians(rng.uniform(0.5, 90)), rng.uniform(0, math.pi), rng.choice([0.5, 1.0])))
            for _ in range(2)
        ]
        t = trace_interference(*covs)
        assert -1e-9 <= t.value <= m * m * (1 + 1e-12)
        worst_upper = max(worst_upper, t.value - t.upper)
        assert t.value <= t.upper * (1 + 1e-9)
        if all(coupling_is_near_equal(c.eigenvalues) for c in covs):
            near_equal += 1
            assert t.value >= t.lower * (1 - 1e-9)
    contained = 0
    for _ in range(100):
        r = hardening_variance(random_spec(32, rng))
        contained += r.rr_lower - 1e-15 <= r.quadratic_form <= r.rr_upper + 1e-15 and r.rr_upper <= 1
    # equal-coupling equality case of the lower bound, with random bases
    u1, u2 = haar_unitary(m, rng), haar_unitary(m, rng)
    from wmimo.channel import build_covariance

    eq = trace_interference(build_covariance(u1, np.ones(m)), build_covariance(u2, np.ones(m)))
    ok = contained == 100 and abs(eq.value - m) <= 1e-9
    report(
        "C7 bound suite",
        ok,
        f"0<=value<=M^2 and upper bound on 100 one-ring pairs ({near_equal} near-equal for lower bound); "
        f"equal-coupling value {eq.value:.12f}=M; Rayleigh-Ritz {contained}/100",
    )
    assert ok


def test_c8_determinism(default_runs):
    same = {}
    for exp in EXPERIMENTS:
        first = default_runs.get(exp)
        second = run_experiment(build_config(exp)).to_csv()
        same[exp] = first == second
    ok = all(same.values())
    report("C8 determinism", ok, ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()))
    assert ok


def test_c9_scaling_exponents(default_runs):
    res = SweepResult.from_csv(default_runs.get("scaling-diagnostic"))
    assert res.values == [32, 64, 128, 256, 512]
    eps = res.metadata["exponents"]
    e1, e3 = eps["scenario1_coupling_max"], eps["scenario3_coupling_max"]
    ok = abs(e1) <= 0.1 and abs(e3 - 1) <= 0.1
    report("C9 scaling exponents", ok, f"scenario1 eps={e1:.3f}, scenario3 eps={e3:.3f}")
    assert ok
