"""Weichselberger channel model: user specs, channel draws, covariances and scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .numerics import (
    HERMITIAN_RTOL,
    NotPSDError,
    QuadratureError,
    as_matrix,
    as_vector,
    clip_psd,
    complex_normal,
    gauss_legendre_grid,
    haar_unitary,
    hermitian_eig,
    is_hermitian,
    max_unitarity_error,
)

COUPLING_RESCALE_RTOL = 1e-6
LOS_NORM_RTOL = 1e-9
UNITARY_ATOL = 1e-9
# per-subinterval phase excursion of the one-ring integrand kept well inside
# what the 64-point rule resolves to machine precision
ONE_RING_MAX_PHASE = 40.0


def normalize_coupling(omega, m: int | None = None) -> np.ndarray:
    """Validate a coupling vector and rescale it so that it sums to M exactly.

    Inputs off by more than 1e-6 (relative) from sum M are rejected rather than
    silently rescaled.
    """
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("coupling vector must be a non-empty 1-D array")
    if m is not None and w.size != m:
        raise ValueError(f"coupling vector has length {w.size}, expected {m}")
    if not np.all(np.isfinite(w)):
        raise ValueError("coupling vector has non-finite entries")
    if np.any(w < 0):
        raise ValueError("coupling vector has negative entries")
    total = float(np.sum(w))
    target = float(w.size)
    if abs(total - target) > COUPLING_RESCALE_RTOL * target:
        raise ValueError(f"coupling vector sums to {total!r}, expected {target:g} (tr(Lambda) = M)")
    return w * (target / total)


def ricean_weights(k_factor: float) -> tuple[float, float]:
    """(eta, gamma) = (sqrt(K/(K+1)), sqrt(1/(K+1))); K = inf is pure LoS."""
    if not k_factor >= 0:
        raise ValueError(f"K-factor must be >= 0, got {k_factor!r}")
    if math.isinf(k_factor):
        return 1.0, 0.0
    return math.sqrt(k_factor / (k_factor + 1.0)), math.sqrt(1.0 / (k_factor + 1.0))


@dataclass(frozen=True)
class UserChannelSpec:
    """Per-user parameters of h = eta * los + gamma * U (sqrt(omega) * z).

    ``coupling`` is rescaled on construction so that it sums to M; ``los`` must
    already satisfy ||los||^2 = M.
    """

    k_factor: float
    eigenbasis: np.ndarray
    coupling: np.ndarray
    los: np.ndarray

    def __post_init__(self) -> None:
        u = as_matrix(self.eigenbasis)
        m = u.shape[0]
        if max_unitarity_error(u) > UNITARY_ATOL:
            raise ValueError("eigenbasis is not unitary")
        los = as_vector(self.los)
        if los.size != m:
            raise ValueError(f"LoS vector has length {los.size}, expected {m}")
        energy = float(np.vdot(los, los).real)
        if abs(energy - m) > LOS_NORM_RTOL * m:
            raise ValueError(f"LoS vector has ||h||^2 = {energy!r}, expected {m}")
        ricean_weights(self.k_factor)
        object.__setattr__(self, "eigenbasis", u)
        object.__setattr__(self, "coupling", normalize_coupling(self.coupling, m))
        object.__setattr__(self, "los", los)
        object.__setattr__(self, "k_factor", float(self.k_factor))

    @property
    def m(self) -> int:
        return self.eigenbasis.shape[0]

    @property
    def eta(self) -> float:
        return ricean_weights(self.k_factor)[0]

    @property
    def gamma(self) -> float:
        return ricean_weights(self.k_factor)[1]

    @cached_property
    def los_projection(self) -> np.ndarray:
        """v = U^H los, the LoS response in the eigenbasis."""
        return self.eigenbasis.conj().T @ self.los

    @cached_property
    def covariance(self) -> CovarianceMatrix:
        return build_covariance(self.eigenbasis, self.coupling)


@dataclass
class CovarianceMatrix:
    """Hermitian PSD matrix with a lazily computed, clipped eigendecomposition."""

    q: np.ndarray
    eig: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.q = as_matrix(self.q)
        if not is_hermitian(self.q, HERMITIAN_RTOL):
            raise ValueError("covariance matrix is not Hermitian")

    @property
    def m(self) -> int:
        return self.q.shape[0]

    def decompose(self) -> tuple[np.ndarray, np.ndarray]:
        if self.eig is None:
            u, lam = hermitian_eig(self.q)
            self.eig = (u, clip_psd(lam))
        return self.eig

    @property
    def eigenbasis(self) -> np.ndarray:
        return self.decompose()[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.decompose()[1]

    @property
    def trace(self) -> float:
        return float(np.trace(self.q).real)


def build_covariance(u, omega) -> CovarianceMatrix:
    """Q = U diag(omega) U^H with the eigendecomposition attached."""
    u = as_matrix(u)
    if max_unitarity_error(u) > UNITARY_ATOL:
        raise ValueError("eigenbasis is not unitary")
    w = normalize_coupling(omega, u.shape[0])
    q = (u * w) @ u.conj().T
    q = 0.5 * (q + q.conj().T)
    order = np.argsort(-w, kind="stable")
    return CovarianceMatrix(q, eig=(u[:, order], w[order]))


def sample_channel(spec: UserChannelSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw h (shape (M,)) or ``size`` independent draws (shape (size, M))."""
    n = 1 if size is None else int(size)
    h = np.broadcast_to(spec.eta * spec.los, (n, spec.m)).copy()
    if spec.gamma > 0.0:
        z = complex_normal(rng, (n, spec.m))
        h += spec.gamma * ((z * np.sqrt(spec.coupling)) @ spec.eigenbasis.T)
    return h[0] if size is None else h


def ula_steering(m: int, phi: float, d: float) -> np.ndarray:
    """ULA response [1, e^{j2pi d cos(phi)}, ..., e^{j2pi d (M-1) cos(phi)}]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not d > 0:
        raise ValueError("antenna spacing must be > 0")
    return np.exp(2j * np.pi * d * np.arange(m) * math.cos(phi))


def coupling_scenario(scenario: int, m: int) -> np.ndarray:
    """Coupling vectors of the three hardening scenarios (each sums to M).

    1: [1, ..., 1]; 2: [M/2, M/(2M-2), ..., M/(2M-2)]; 3: [M, 0, ..., 0].
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if scenario == 1:
        return np.ones(m)
    if scenario == 2:
        w = np.full(m, m / (2.0 * m - 2.0))
        w[0] = m / 2.0
        return w
    if scenario == 3:
        w = np.zeros(m)
        w[0] = float(m)
        return w
    raise ValueError(f"unknown coupling scenario {scenario!r} (expected 1, 2 or 3)")


def make_spec(
    m: int,
    k_factor: float,
    coupling,
    *,
    rng: np.random.Generator | None = None,
    eigenbasis=None,
    phi: float = math.pi / 3,
    d: float = 0.5,
    los=None,
) -> UserChannelSpec:
    """Assemble a spec: Haar eigenbasis unless given, ULA LoS unless given."""
    if eigenbasis is None:
        if rng is None:
            raise ValueError("need an rng to draw a Haar eigenbasis")
        eigenbasis = haar_unitary(m, rng)
    if los is None:
        los = ula_steering(m, phi, d)
    return UserChannelSpec(k_factor, eigenbasis, coupling, los)


def random_spec(
    m: int,
    rng: np.random.Generator,
    k_range: tuple[float, float] = (0.0, 10.0),
    d: float = 0.5,
) -> UserChannelSpec:
    """Haar eigenbasis, Dirichlet coupling scaled to M, uniform K and ULA angle."""
    lo, hi = k_range
    k = lo if lo == hi else rng.uniform(lo, hi)
    omega = rng.dirichlet(np.ones(m)) * m
    phi = rng.uniform(0.0, math.pi)
    return make_spec(m, k, omega, rng=rng, phi=phi, d=d)


@dataclass(frozen=True)
class OneRingConfig:
    m: int
    spread: float
    phi0: float
    d: float = 0.5

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 < self.spread <= math.pi:
            raise ValueError(f"angular spread must lie in (0, pi], got {self.spread!r}")
        if not self.d > 0:
            raise ValueError("antenna spacing must be > 0")


def one_ring_lags(cfg: OneRingConfig, *, intervals: int | None = None) -> np.ndarray:
    """First row of the one-ring covariance: entry n is [Q]_{0,n}.

    [Q]_{i,j} = (1/(2 dphi)) * integral over [phi0 - dphi, phi0 + dphi] of
    exp(-j 2 pi d (j - i) sin(phi)); it depends on j - i only.
    """
    lo = cfg.phi0 - cfg.spread
    hi = cfg.phi0 + cfg.spread
    if intervals is None:
        rate = 2.0 * math.pi * cfg.d * max(cfg.m - 1, 1)
        intervals = math.ceil(rate * (hi - lo) / ONE_RING_MAX_PHASE)
    nodes, weights = gauss_legendre_grid(lo, hi, intervals)
    lags = np.arange(cfg.m)
    phase = np.exp(-2j * np.pi * cfg.d * np.outer(lags, np.sin(nodes)))
    row = phase @ weights / (hi - lo)
    if not np.all(np.isfinite(row)):
        raise QuadratureError("one-ring quadrature produced non-finite entries")
    row[0] = 1.0
    return row


def one_ring_covariance(cfg: OneRingConfig) -> CovarianceMatrix:
    """One-ring covariance: Hermitian Toeplitz with unit diagonal."""
    row = one_ring_lags(cfg)
    idx = np.arange(cfg.m)
    lag = idx[None, :] - idx[:, None]
    q = np.where(lag >= 0, row[np.abs(lag)], np.conj(row[np.abs(lag)]))
    return CovarianceMatrix(q)


def check_covariance(cov: CovarianceMatrix) -> None:
    """Raise if ``cov`` is not Hermitian PSD with unit diagonal."""
    if not is_hermitian(cov.q):
        raise ValueError("not Hermitian")
    if np.max(np.abs(np.diagonal(cov.q) - 1.0)) > 1e-12:
        raise ValueError("diagonal is not all ones")
    try:
        if cov.eig is None:
            clip_psd(hermitian_eig(cov.q, vectors=False)[1])
        else:
            clip_psd(cov.eig[1])
    except NotPSDError as exc:
        raise ValueError(str(exc)) from exc


def ones_matrix(m: int) -> np.ndarray:
    return np.ones((m, m), dtype=complex)


def block_covariance_scenario(scenario: int, m: int, d_rank: int) -> np.ndarray:
    """Q1 of the rank-control scenarios, built block by block as written.

    1: [[1_{M-D,M-D}, 0], [0, I_D]]
    2: [[1_{D,M-D}, 0_{D,D}], [0_{M-D,D}, I_{M-D}]]  (not Hermitian; use only in traces)
    The companion Q2 is ``ones_matrix(m)``.
    """
    if not 1 <= d_rank <= m - 1:
        raise ValueError(f"rank control D={d_rank} outside [1, {m - 1}]")
    q = np.zeros((m, m), dtype=complex)
    if scenario == 1:
        q[: m - d_rank, : m - d_rank] = 1.0
        q[m - d_rank :, m - d_rank :] = np.eye(d_rank)
    elif scenario == 2:
        q[:d_rank, : m - d_rank] = 1.0
        q[d_rank:, d_rank:] = np.eye(m - d_rank)
    else:
        raise ValueError(f"unknown block scenario {scenario!r} (expected 1 or 2)")
    return q
