"""Dense complex linear algebra, Haar sampling, Hermitian eigensolver and quadrature.

Vectors and matrices are plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

HERMITIAN_RTOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
PSD_CLIP_RTOL = 1e-10

GL_NODES = 64
GL_MAX_WIDTH = math.pi / 8


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class QuadratureError(NumericalError):
    pass


class EigenError(NumericalError):
    pass


class NotPSDError(NumericalError):
    pass


def as_vector(a) -> np.ndarray:
    v = np.asarray(a, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    x = np.asarray(a, dtype=complex)
    if x.ndim != 2 or x.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {x.shape}")
    if square and x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix has non-finite entries")
    return x


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = np.max(np.abs(a)) if a.size else 0.0
    return bool(np.max(np.abs(a - a.conj().T)) <= rtol * scale)


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equal-length vectors."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return a * b


def trace_product(a, b) -> complex:
    """tr(a @ b) in O(M^2), without forming the product."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a * b.T))


def max_unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries: two real normals scaled by 1/sqrt(2)."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def haar_unitary(m: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw a Haar-distributed m x m unitary matrix (or a stack of ``size`` of them).

    QR of a CN(0, 1) matrix with the phases of diag(R) pushed back into Q.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    shape = (m, m) if size is None else (size, m, m)
    z = complex_normal(rng, shape)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    # column i scaled by the phase of R_ii, i.e. Q R = (Q D)(D^* R) with D^* R positive on the diagonal
    return q * phase[..., None, :]


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one cyclic Jacobi sweep; every index pair appears exactly once.

    ``n`` must be even. Each round holds n/2 disjoint pairs, so the rotations of a
    round commute and can be applied together.
    """
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _rotate_rows(x: np.ndarray, p: np.ndarray, r: np.ndarray, c: np.ndarray, sp: np.ndarray) -> None:
    row_p = x[p, :]
    row_r = x[r, :]
    x[p, :] = c * row_p - sp * row_r
    x[r, :] = np.conj(sp) * row_p + c * row_r


def hermitian_eig(
    q,
    *,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    vectors: bool = True,
) -> tuple[np.ndarray | None, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(U, lam)`` with ``q = U diag(lam) U^H``; eigenvalues are real and
    sorted in non-increasing order (stable, so ties keep the rotation order).
    Iterates until the off-diagonal Frobenius norm drops below ``tol`` times the
    Frobenius norm of ``q``. With ``vectors=False`` U is not accumulated and
    ``None`` is returned in its place.
    """
    a = as_matrix(q)
    if not is_hermitian(a):
        raise ValueError("matrix is not Hermitian")
    m = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    n = m + (m % 2)
    if n != m:
        # dummy row/column decoupled from the rest; eigenvalue 0 dropped at the end
        a = np.pad(a, ((0, 1), (0, 1)))
    w = np.eye(n, dtype=complex) if vectors else None
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return (np.eye(m, dtype=complex) if vectors else None), np.zeros(m)
    rounds = _round_robin(n) if n > 1 else []
    # entries this small are left alone: all of them together stay below half the target
    negligible = max(0.5 * tol * scale / n, 1e-300)

    for _ in range(max_sweeps):
        off = _off_diagonal_norm(a)
        if off <= tol * scale:
            break
        for p, r in rounds:
            mag = np.abs(a[p, r])
            active = mag > negligible
            if not np.any(active):
                continue
            p, r, mag = p[active], r[active], mag[active]
            phase = a[p, r] / mag
            tau = (a[r, r].real - a[p, p].real) / (2.0 * mag)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.hypot(1.0, t)
            s = t * c
            # J = [[c, s e^{i th}], [-s e^{-i th}, c]] on (p, r).  Only row operations:
            # A' = J^H A J = J^H (J^H A)^H since A is Hermitian; W = V^H gets W <- J^H W.
            sp = s * phase
            c2 = c[:, None]
            sp2 = sp[:, None]
            _rotate_rows(a, p, r, c2, sp2)
            a = np.ascontiguousarray(a.conj().T)
            _rotate_rows(a, p, r, c2, sp2)
            if w is not None:
                _rotate_rows(w, p, r, c2, sp2)
            a[p, r] = 0.0
            a[r, p] = 0.0
    else:
        off = _off_diagonal_norm(a)
        if off > tol * scale:
            raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")

    lam = np.diagonal(a).real.copy()[:m]
    order = np.argsort(-lam, kind="stable")
    if w is None:
        return None, lam[order]
    v = w.conj().T[:m, :m]
    return v[:, order], lam[order]


def clip_psd(lam: np.ndarray, rtol: float = PSD_CLIP_RTOL) -> np.ndarray:
    """Zero out round-off negatives; reject eigenvalues below -rtol * max(lam)."""
    lam = np.asarray(lam, dtype=float)
    top = float(np.max(lam)) if lam.size else 0.0
    floor = -rtol * max(top, 0.0)
    if np.any(lam < floor):
        raise NotPSDError(f"matrix is not PSD: smallest eigenvalue {lam.min():.3e}")
    return np.where(lam < 0.0, 0.0, lam)


def gauss_legendre_grid(lo: float, hi: float, intervals: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite 64-point Gauss-Legendre rule on [lo, hi].

    The interval count is at least ceil((hi - lo) / (pi / 8)); pass a larger
    ``intervals`` for oscillatory integrands.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    need = max(1, math.ceil((hi - lo) / GL_MAX_WIDTH))
    k = need if intervals is None else max(need, int(intervals))
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    edges = np.linspace(lo, hi, k + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, *, intervals: int | None = None) -> complex:
    """Integrate ``f`` over [lo, hi] with the composite Gauss-Legendre rule.

    ``f`` is called once with the full node array and must be vectorized.
    """
    nodes, weights = gauss_legendre_grid(lo, hi, intervals)
    vals = np.asarray(f(nodes), dtype=complex)
    if vals.shape != nodes.shape:
        vals = np.broadcast_to(vals, nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand returned a non-finite sample")
    return complex(np.dot(weights, vals))
