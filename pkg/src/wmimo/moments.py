"""Closed-form moments, variances and bounds for channel hardening and favorable propagation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .channel import CovarianceMatrix, UserChannelSpec, normalize_coupling
from .numerics import as_matrix, trace_product


def _weighted_energy(weights: np.ndarray, x: np.ndarray) -> float:
    # x^H diag(w) x as a sum of nonnegative terms
    return float(np.sum(weights * (x.real**2 + x.imag**2)))


def los_quadratic_form(spec: UserChannelSpec) -> float:
    """v^H Lambda v with v = U^H los."""
    return _weighted_energy(spec.coupling, spec.los_projection)


def nlos_fourth_moment(omega) -> float:
    """E||U(sqrt(omega) * z)||^4 = tr(Lambda^2) + tr(Lambda)^2."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("coupling vector has negative entries")
    return float(np.sum(w * w) + np.sum(w) ** 2)


def fourth_moment(spec: UserChannelSpec) -> float:
    """E||h||^4 = gamma^4 tr(Lambda^2) + M^2 + 2 eta^2 gamma^2 v^H Lambda v."""
    eta2, gamma2 = spec.eta**2, spec.gamma**2
    m = spec.m
    return gamma2**2 * float(np.sum(spec.coupling**2)) + m * m + 2.0 * eta2 * gamma2 * los_quadratic_form(spec)


def second_moment(spec: UserChannelSpec) -> float:
    """E||h||^2, which is M under the trace and LoS-energy normalization."""
    return float(spec.m)


@dataclass(frozen=True)
class HardeningReport:
    variance: float
    los_term: float
    nlos_term: float
    quadratic_form: float
    rr_lower: float
    rr_upper: float


def rayleigh_ritz_bounds(spec: UserChannelSpec) -> tuple[float, float]:
    """min(omega)/M <= v^H Lambda v / M^2 <= max(omega)/M."""
    m = spec.m
    return float(np.min(spec.coupling)) / m, float(np.max(spec.coupling)) / m


def hardening_variance(spec: UserChannelSpec) -> HardeningReport:
    """Var(||h||^2 / E||h||^2) = (gamma^2/M^2) (2 eta^2 v^H Lambda v + gamma^2 tr(Lambda^2))."""
    m = spec.m
    eta2, gamma2 = spec.eta**2, spec.gamma**2
    quad = los_quadratic_form(spec)
    los_term = 2.0 * eta2 * quad
    nlos_term = gamma2 * float(np.sum(spec.coupling**2))
    lower, upper = rayleigh_ritz_bounds(spec)
    return HardeningReport(
        variance=gamma2 / (m * m) * (los_term + nlos_term),
        los_term=los_term,
        nlos_term=nlos_term,
        quadratic_form=quad / (m * m),
        rr_lower=lower,
        rr_upper=upper,
    )


def quadratic_form_alignment(omega) -> float:
    """(omega_1 + omega_2) / (2M): los^H Q los / M^2 when los = sqrt(M/2) (u_1 + u_2)."""
    w = np.asarray(omega, dtype=float)
    if w.size < 2:
        raise ValueError("need M >= 2")
    return float(w[0] + w[1]) / (2.0 * w.size)


def explicit_alignment(u: np.ndarray, omega) -> float:
    """The same quantity, computed by building the LoS vector and Q explicitly."""
    u = as_matrix(u)
    w = np.asarray(omega, dtype=float)
    m = u.shape[0]
    los = np.sqrt(m / 2.0) * (u[:, 0] + u[:, 1])
    q = (u * w) @ u.conj().T
    return float(np.vdot(los, q @ los).real) / (m * m)


@dataclass(frozen=True)
class TraceInterference:
    value: float
    upper: float | None = None
    lower: float | None = None
    coupling_overlap: np.ndarray | None = None


def trace_interference(q_k, q_l) -> TraceInterference:
    """tr(Q_k Q_l) with the bounds M^2 ||V||_max^2 and M, V = U_l^H U_k.

    Bounds are only produced when both arguments are ``CovarianceMatrix``
    instances; raw arrays (e.g. the non-Hermitian block scenario) get the value
    alone.
    """
    a = q_k.q if isinstance(q_k, CovarianceMatrix) else as_matrix(q_k)
    b = q_l.q if isinstance(q_l, CovarianceMatrix) else as_matrix(q_l)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    value = trace_product(a, b).real
    if not (isinstance(q_k, CovarianceMatrix) and isinstance(q_l, CovarianceMatrix)):
        return TraceInterference(value)
    m = a.shape[0]
    v = q_l.eigenbasis.conj().T @ q_k.eigenbasis
    overlap = np.abs(v) ** 2
    return TraceInterference(value, upper=m * m * float(np.max(overlap)), lower=float(m), coupling_overlap=overlap)


def trace_from_coupling(omega_k, omega_l, overlap: np.ndarray) -> float:
    """sum_{m,n} omega_l[m] omega_k[n] |V(m, n)|^2."""
    return float(np.asarray(omega_l) @ overlap @ np.asarray(omega_k))


@dataclass(frozen=True)
class FpReport:
    variance: float
    term_los_los: float
    term_nlos_nlos: float
    term_k_los: float
    term_l_los: float
    trace: float
    trace_upper: float
    trace_lower: float

    @property
    def terms(self) -> dict[str, float]:
        return {
            "los_los": self.term_los_los,
            "nlos_nlos": self.term_nlos_nlos,
            "k_los": self.term_k_los,
            "l_los": self.term_l_los,
        }


def cross_moment_terms(spec_k: UserChannelSpec, spec_l: UserChannelSpec) -> dict[str, float]:
    """The four nonnegative terms of E|h_k^H h_l|^2.

    los_los   eta_k^2 eta_l^2 |los_k^H los_l|^2
    nlos_nlos gamma_k^2 gamma_l^2 tr(Q_k Q_l)
    k_los     eta_k^2 gamma_l^2 los_k^H Q_l los_k
    l_los     gamma_k^2 eta_l^2 los_l^H Q_k los_l
    """
    if spec_k.m != spec_l.m:
        raise ValueError(f"antenna count mismatch: {spec_k.m} vs {spec_l.m}")
    ek2, gk2 = spec_k.eta**2, spec_k.gamma**2
    el2, gl2 = spec_l.eta**2, spec_l.gamma**2
    inner = np.vdot(spec_k.los, spec_l.los)
    overlap = np.abs(spec_l.eigenbasis.conj().T @ spec_k.eigenbasis) ** 2
    trace = trace_from_coupling(spec_k.coupling, spec_l.coupling, overlap)
    k_in_l = _weighted_energy(spec_l.coupling, spec_l.eigenbasis.conj().T @ spec_k.los)
    l_in_k = _weighted_energy(spec_k.coupling, spec_k.eigenbasis.conj().T @ spec_l.los)
    return {
        "los_los": ek2 * el2 * float(abs(inner) ** 2),
        "nlos_nlos": gk2 * gl2 * trace,
        "k_los": ek2 * gl2 * k_in_l,
        "l_los": gk2 * el2 * l_in_k,
    }


def cross_moment(spec_k: UserChannelSpec, spec_l: UserChannelSpec) -> float:
    """E|h_k^H h_l|^2 for independent users."""
    return float(sum(cross_moment_terms(spec_k, spec_l).values()))


def fp_variance(spec_k: UserChannelSpec, spec_l: UserChannelSpec) -> FpReport:
    """E|h_k^H h_l|^2 / M^2 with its term breakdown and the trace bounds."""
    terms = cross_moment_terms(spec_k, spec_l)
    m = spec_k.m
    overlap = np.abs(spec_l.eigenbasis.conj().T @ spec_k.eigenbasis) ** 2
    return FpReport(
        variance=sum(terms.values()) / (m * m),
        term_los_los=terms["los_los"],
        term_nlos_nlos=terms["nlos_nlos"],
        term_k_los=terms["k_los"],
        term_l_los=terms["l_los"],
        trace=trace_from_coupling(spec_k.coupling, spec_l.coupling, overlap),
        trace_upper=m * m * float(np.max(overlap)),
        trace_lower=float(m),
    )


# --- growth diagnostics -------------------------------------------------------

def _pair(spec) -> tuple[UserChannelSpec, UserChannelSpec]:
    if isinstance(spec, UserChannelSpec):
        return spec, spec
    k, l = spec
    return k, l


SCALING_METRICS: dict[str, Callable] = {
    "coupling_max": lambda s: float(np.max(_pair(s)[0].coupling)),
    "los_projection_max": lambda s: float(np.max(np.abs(_pair(s)[0].los_projection) ** 2)),
    "coupling_outer_max": lambda s: float(np.max(_pair(s)[1].coupling) * np.max(_pair(s)[0].coupling)),
    "basis_overlap_max": lambda s: float(np.max(np.abs(_pair(s)[0].eigenbasis.conj().T @ _pair(s)[1].eigenbasis))),
    "cross_projection_max": lambda s: float(np.max(np.abs(_pair(s)[0].los.conj() @ _pair(s)[1].eigenbasis))),
    "los_inner_abs": lambda s: float(abs(np.vdot(_pair(s)[0].los, _pair(s)[1].los))),
}


@dataclass(frozen=True)
class ScalingDiagnostic:
    metric: str
    m_values: tuple[int, ...]
    values: tuple[float, ...]
    exponent: float


def fit_exponent(m_values: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(M); NaN if fewer than 3 positive points."""
    m = np.asarray(m_values, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = y > 0
    if np.count_nonzero(keep) < 3:
        return float("nan")
    slope, _ = np.polyfit(np.log(m[keep]), np.log(y[keep]), 1)
    return float(slope)


def assess_scaling(metric: str, specs_by_m: Mapping[int, object]) -> ScalingDiagnostic:
    """Evaluate a growth metric across M and fit its exponent epsilon in O(M^epsilon).

    ``specs_by_m`` maps M to a spec, or to a (spec_k, spec_l) pair for the
    two-user metrics. A decade or more of M range gives a usable fit.
    """
    if metric not in SCALING_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(SCALING_METRICS)}")
    ms = sorted(specs_by_m)
    if len(ms) < 3:
        raise ValueError("need at least 3 distinct M values")
    fn = SCALING_METRICS[metric]
    values = tuple(fn(specs_by_m[m]) for m in ms)
    return ScalingDiagnostic(metric, tuple(ms), values, fit_exponent(ms, values))


def coupling_is_near_equal(omega, rtol: float = 0.01) -> bool:
    w = normalize_coupling(omega)
    return bool(np.max(np.abs(w - 1.0)) <= rtol)
