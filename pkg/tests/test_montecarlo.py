import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmimo.channel import build_covariance, coupling_scenario, make_spec, random_spec
from wmimo.moments import cross_moment, fourth_moment
from wmimo.montecarlo import (
    McConfig,
    PowerSums,
    estimate_cross_moment,
    estimate_gain_moments,
    fp_trace,
    hardening_trace,
    run_trials,
)
from wmimo.numerics import haar_unitary


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(trials=0)
    with pytest.raises(ValueError):
        McConfig(workers=0)
    with pytest.raises(ValueError):
        McConfig(seed=-1)


def test_worker_split():
    assert McConfig(10, 0, 3).worker_trials() == [4, 3, 3]


def test_child_seeds_deterministic_and_distinct():
    cfg = McConfig(10, 5, 1)
    assert cfg.child(1, 2) == cfg.child(1, 2)
    assert cfg.child(1, 2).seed != cfg.child(2, 1).seed


@settings(max_examples=40, deadline=None)
@given(
    data=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60),
    cut=st.integers(1, 59),
)
def test_power_sums_merge_matches_direct(data, cut):
    x = np.array(data)
    cut = min(cut, len(x) - 1)
    a, b = PowerSums(), PowerSums()
    a.add(x[:cut])
    b.add(x[cut:])
    merged = PowerSums.merge([a, b])
    mean, m2, m4 = merged.central()
    scale = 1 + np.max(np.abs(x))
    assert abs(mean - x.mean()) <= 1e-9 * scale
    assert abs(m2 - x.var()) <= 1e-7 * scale**2
    assert abs(m4 - np.mean((x - x.mean()) ** 4)) <= 1e-5 * scale**4


def test_power_sums_constant_data_exact():
    acc = PowerSums()
    acc.add(np.full(1000, 0.1))
    est = acc.mean_estimate()
    assert est.mean == 0.1 and est.std_error == 0.0


def test_pure_los_gain_moments(rng):
    m = 12
    spec = make_spec(m, math.inf, coupling_scenario(2, m), rng=rng)
    m2, m4 = estimate_gain_moments(spec, McConfig(5000, 3, 2))
    assert abs(m2.mean - m) <= 1e-12 * m and m2.std_error == 0.0
    assert abs(m4.mean - m * m) <= 1e-12 * m * m and m4.std_error == 0.0
    assert m2.z_score(m) == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gain_second_moment_is_m(seed):
    spec = random_spec(10, np.random.default_rng(seed))
    m2, _ = estimate_gain_moments(spec, McConfig(50_000, seed, 1))
    assert abs(m2.z_score(10.0)) <= 5


@pytest.mark.slow
def test_gain_fourth_moment_oracle(rng):
    spec = random_spec(16, rng)
    _, m4 = estimate_gain_moments(spec, McConfig(1_000_000, 11, 2))
    assert abs(m4.z_score(fourth_moment(spec))) <= 5


def test_cross_pure_los(rng):
    k = make_spec(8, math.inf, np.ones(8), rng=rng, phi=0.4)
    l = make_spec(8, math.inf, np.ones(8), rng=rng, phi=1.3)
    est = estimate_cross_moment(k, l, McConfig(2000, 0, 1))
    exact = abs(np.vdot(k.los, l.los)) ** 2
    assert est.std_error == 0.0
    assert abs(est.mean - exact) <= 1e-12 * max(exact, 1.0)


def test_cross_iid_rayleigh():
    m = 8
    k = make_spec(m, 0.0, np.ones(m), eigenbasis=np.eye(m))
    est = estimate_cross_moment(k, k, McConfig(200_000, 4, 1))
    assert abs(est.z_score(m)) <= 5


@pytest.mark.slow
def test_cross_random_pair_oracle(rng):
    k, l = random_spec(16, rng), random_spec(16, rng)
    est = estimate_cross_moment(k, l, McConfig(1_000_000, 12, 1))
    assert abs(est.z_score(cross_moment(k, l))) <= 5


def test_cross_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        estimate_cross_moment(random_spec(4, rng), random_spec(5, rng), McConfig(10))


def test_determinism_fixed_workers(rng):
    k, l = random_spec(6, rng), random_spec(6, rng)
    cfg = McConfig(30_000, 99, 3)
    assert estimate_cross_moment(k, l, cfg) == estimate_cross_moment(k, l, cfg)
    assert estimate_gain_moments(k, cfg) == estimate_gain_moments(k, cfg)


def test_worker_count_invariance(rng):
    spec = random_spec(8, rng)
    exact = fourth_moment(spec)
    for workers in (1, 2, 5):
        _, m4 = estimate_gain_moments(spec, McConfig(100_000, 7, workers))
        assert abs(m4.z_score(exact)) <= 5


def test_std_error_calibration(rng):
    # ~68% of estimates should land within one standard error of the truth
    spec = random_spec(6, rng)
    exact = fourth_moment(spec)
    hits = 0
    for run in range(100):
        _, m4 = estimate_gain_moments(spec, McConfig(4000, 1000 + run, 1))
        hits += abs(m4.mean - exact) <= m4.std_error
    assert 53 <= hits <= 83


def _normalized_gain(spec):
    def draw(r, n):
        z = (r.standard_normal((n, spec.m)) + 1j * r.standard_normal((n, spec.m))) / math.sqrt(2)
        h = spec.eta * spec.los + spec.gamma * (z * np.sqrt(spec.coupling)) @ spec.eigenbasis.T
        return {"g": np.sum(np.abs(h) ** 2, axis=1) / spec.m}

    return draw


def test_lemma_sample_mean_concentrates():
    trials = 2000
    avg_dev = []
    for m in [4, 16, 64, 256]:
        devs = []
        for seed in range(10):
            spec = make_spec(m, 0.5, np.ones(m), rng=np.random.default_rng(seed))
            acc = run_trials(_normalized_gain(spec), McConfig(trials, seed, 1), m)
            devs.append(abs(acc["g"].mean_estimate().mean - 1.0))
        if m == 256:
            assert max(devs) <= 3 / math.sqrt(trials * m)
        avg_dev.append(np.mean(devs))
    assert all(np.diff(avg_dev) < 0)


def test_hardening_trace_scenario_one():
    ms = [16, 32, 64]
    res = hardening_trace(1, 0.5, ms, McConfig(2000, 5, 1), basis_draws=4)
    for m, cf, mc, se in zip(ms, res.columns["closed_form"], res.columns["monte_carlo"], res.columns["std_error"]):
        assert abs(cf - 8 / (9 * m)) <= 1e-12
        assert abs(mc - cf) <= 5 * se


def test_hardening_trace_rank_one_floor():
    res = hardening_trace(3, 0.5, [256], McConfig(500, 6, 1), basis_draws=8)
    assert abs(res.columns["closed_form"][0] - 4 / 9) <= 0.15 * 4 / 9


def test_hardening_trace_scenario_two_floor():
    m = 256
    res = hardening_trace(2, 0.5, [m], McConfig(500, 6, 1), basis_draws=8)
    floor = (4 / 9) * (0.25 + 1 / (4 * (m - 1)))
    assert abs(res.columns["closed_form"][0] - floor) <= 0.15 * floor


def test_hardening_trace_pure_los_zero():
    res = hardening_trace(3, math.inf, [16, 32], McConfig(500, 1, 1), basis_draws=2)
    assert res.columns["closed_form"] == [0.0, 0.0]
    assert res.columns["monte_carlo"] == [0.0, 0.0]


def test_fp_trace_iid():
    ms = [8, 32]
    iid = lambda m, r: make_spec(m, 0.0, np.ones(m), eigenbasis=np.eye(m))  # noqa: E731
    res = fp_trace(iid, iid, ms, McConfig(20_000, 3, 1))
    for m, cf, mc, se in zip(ms, res.columns["closed_form"], res.columns["mc_second_moment"], res.columns["std_error"]):
        assert abs(cf - 1 / m) < 1e-14
        assert abs(mc - cf) <= 5 * se


def test_fp_trace_identical_los():
    los = lambda m, r: make_spec(m, math.inf, np.ones(m), eigenbasis=np.eye(m), phi=0.5)  # noqa: E731
    res = fp_trace(los, los, [4, 16, 64], McConfig(100, 3, 1))
    np.testing.assert_allclose(res.columns["mc_mean_abs"], 1.0, rtol=1e-12)
    np.testing.assert_allclose(res.columns["closed_form"], 1.0, rtol=1e-12)


def test_fp_trace_aligned_rank_one():
    def aligned(m, r):
        u = haar_unitary(m, np.random.default_rng(m))
        return make_spec(m, 0.0, coupling_scenario(3, m), eigenbasis=u)

    res = fp_trace(aligned, aligned, [8, 64], McConfig(20_000, 3, 1))
    np.testing.assert_allclose(res.columns["closed_form"], 1.0, rtol=1e-12)
    for mc, se in zip(res.columns["mc_second_moment"], res.columns["std_error"]):
        assert abs(mc - 1.0) <= 5 * se
