"""Elementary symmetric functions of eigenvalues and their spectral derivatives.

All array functions broadcast over leading axes: a spectrum argument of shape
``(..., n)`` yields results of shape ``(...)`` (or ``(..., n)`` for per-index
quantities). This lets the cone sampler and the PDE solver evaluate millions
of small spectra without Python loops over points.

Conventions
-----------
``sigma_k(lam | i)`` is sigma_k of ``lam`` with entry ``i`` removed, and
``sigma_k(lam | i, j)`` removes both entries. ``sigma_0 = 1`` and
``sigma_k = 0`` for ``k < 0`` or ``k > n``.

For a Hermitian matrix ``A = U diag(lam) U^H`` the first derivative of
``sigma_k(A)`` is the Hermitian matrix ``G = U diag(f) U^H`` with
``f_i = sigma_{k-1}(lam | i)``, in the sense ``d sigma_k = tr(G dA)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 30


class NotHermitianError(ValueError):
    pass


class EigenConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Sorted (non-increasing) finite eigenvalue vector."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 2:
            raise ValueError("a spectrum needs at least two entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum entries must be finite")
        if np.any(np.diff(v) > 0):
            raise ValueError("spectrum must be sorted non-increasing; use Spectrum.from_unsorted")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_unsorted(cls, values) -> "Spectrum":
        v = np.asarray(values, dtype=float).reshape(-1)
        return cls(v[np.argsort(-v, kind="stable")])

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class EigenDecomposition:
    spectrum: Spectrum
    basis: np.ndarray
    sweeps: int = field(default=0, compare=False)

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.spectrum.values) @ self.basis.conj().T


@dataclass(frozen=True)
class Membership:
    inside: bool
    first_failure: int | None


def _vals(lam) -> np.ndarray:
    return np.asarray(getattr(lam, "values", lam), dtype=float)


# ---------------------------------------------------------------------------
# sigma_k and exclusions
# ---------------------------------------------------------------------------

def esf(lam, kmax: int) -> np.ndarray:
    """All of sigma_0..sigma_kmax, shape ``(..., kmax + 1)``.

    Coefficients of prod_i (1 + lam_i t), built one factor at a time.
    """
    lam = _vals(lam)
    kmax = max(int(kmax), 0)
    out = np.zeros(lam.shape[:-1] + (kmax + 1,), dtype=lam.dtype)
    out[..., 0] = 1.0
    n = lam.shape[-1]
    for i in range(n):
        x = lam[..., i]
        # descending j so each factor is used once
        for j in range(min(i + 1, kmax), 0, -1):
            out[..., j] += x * out[..., j - 1]
    return out


def sigma(lam, k: int) -> np.ndarray | float:
    lam = _vals(lam)
    n = lam.shape[-1]
    if k < 0 or k > n:
        res = np.zeros(lam.shape[:-1])
    else:
        res = esf(lam, k)[..., k]
    return float(res) if res.ndim == 0 else res


def _check_index(i, n):
    if not (0 <= i < n):
        raise IndexError(f"index {i} out of range for spectrum of length {n}")


def sigma_excl(lam, k: int, i: int):
    """sigma_k(lam | i). Indices are zero-based."""
    lam = _vals(lam)
    _check_index(i, lam.shape[-1])
    return sigma(np.delete(lam, i, axis=-1), k)


def sigma_excl2(lam, k: int, i: int, j: int):
    """sigma_k(lam | i, j) for i != j."""
    lam = _vals(lam)
    n = lam.shape[-1]
    _check_index(i, n)
    _check_index(j, n)
    if i == j:
        raise ValueError("sigma_excl2 needs two distinct indices")
    return sigma(np.delete(lam, [i, j], axis=-1), k)


def sigma_grad(lam, k: int) -> np.ndarray:
    """(sigma_{k-1}(lam|1), ..., sigma_{k-1}(lam|n)), shape ``(..., n)``."""
    lam = _vals(lam)
    n = lam.shape[-1]
    out = np.empty(lam.shape)
    for i in range(n):
        out[..., i] = sigma(np.delete(lam, i, axis=-1), k - 1)
    return out


def sigma_pair_matrix(lam, k: int) -> np.ndarray:
    """Symmetric ``(..., n, n)`` array of sigma_{k-2}(lam|pq), zero diagonal.

    These are the second partials of sigma_k in the eigenvalues.
    """
    lam = _vals(lam)
    n = lam.shape[-1]
    out = np.zeros(lam.shape + (n,))
    for p, q in combinations(range(n), 2):
        v = sigma(np.delete(lam, [p, q], axis=-1), k - 2)
        out[..., p, q] = v
        out[..., q, p] = v
    return out


def sigma_hess_offdiag(lam, k: int, p: int, q: int):
    if p == q:
        raise ValueError("p and q must differ")
    if k < 2:
        raise ValueError("off-diagonal second derivatives need k >= 2")
    return sigma_excl2(lam, k - 2, p, q)


def trace_F(lam, k: int):
    """Sum of sigma_k^{pp}, i.e. (n - k + 1) sigma_{k-1}(lam)."""
    lam = _vals(lam)
    n = lam.shape[-1]
    return (n - k + 1) * sigma(lam, k - 1)


def in_gamma(lam, k: int) -> np.ndarray:
    """Boolean mask of membership in the Garding cone Gamma_k."""
    e = esf(lam, k)
    return np.all(e[..., 1:k + 1] > 0, axis=-1)


def gamma_membership(lam, k: int) -> Membership:
    e = esf(_vals(lam), k)[1:]
    bad = np.flatnonzero(e <= 0)
    if bad.size:
        return Membership(False, int(bad[0]) + 1)
    return Membership(True, None)


# ---------------------------------------------------------------------------
# Hermitian eigensolver (cyclic Jacobi, batched)
# ---------------------------------------------------------------------------

def check_hermitian(a: np.ndarray, rtol: float = 1e-12) -> None:
    a = np.asarray(a)
    if a.shape[-1] != a.shape[-2]:
        raise NotHermitianError(f"matrix must be square, got shape {a.shape[-2:]}")
    scale = np.max(np.abs(a), axis=(-2, -1))
    asym = np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), axis=(-2, -1))
    if np.any(asym > rtol * scale):
        raise NotHermitianError("matrix is not Hermitian to within 1e-12 relative")


def eigh_jacobi(a, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS,
                check: bool = True):
    """Batched cyclic Jacobi for Hermitian matrices.

    Returns ``(w, v, sweeps)`` with ``w`` sorted non-increasing along the last
    axis and the columns of ``v`` the matching orthonormal eigenvectors.
    A sweep stops once the off-diagonal Frobenius norm of every matrix is
    below ``tol * ||A||_F``.
    """
    a = np.asarray(a)
    if check:
        check_hermitian(a)
    shape = a.shape
    n = shape[-1]
    A = np.array(a, dtype=complex).reshape(-1, n, n)
    # exact Hermitian start so rotations act on a consistent matrix
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    B = A.shape[0]
    V = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n)).copy()
    thresh = tol * np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2)))
    offmask = ~np.eye(n, dtype=bool)

    sweeps = 0
    while True:
        off = np.sqrt(np.sum(np.abs(A[:, offmask]) ** 2, axis=1))
        active = off > thresh
        if not active.any():
            break
        if sweeps >= max_sweeps:
            raise EigenConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"({int(active.sum())} matrices, worst off-norm {off.max():.3e})")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = A[:, p, q]
                ag = np.abs(g)
                rot = active & (ag > 0)
                if not rot.any():
                    continue
                app = A[:, p, p].real
                aqq = A[:, q, q].real
                safe = np.where(rot, ag, 1.0)
                theta = (aqq - app) / (2.0 * safe)
                sgn = np.where(theta >= 0, 1.0, -1.0)
                t = sgn / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ph = np.where(rot, g / safe, 1.0)
                c = np.where(rot, c, 1.0)
                s = np.where(rot, s, 0.0)
                cph = np.conj(ph)

                # A <- A G, then A <- G^H A, with G = [[c, s], [-s e^{-i th}, c e^{-i th}]]
                cp = A[:, :, p].copy()
                cq = A[:, :, q]
                A[:, :, p] = c[:, None] * cp - (s * cph)[:, None] * cq
                A[:, :, q] = s[:, None] * cp + (c * cph)[:, None] * cq
                rp = A[:, p, :].copy()
                rq = A[:, q, :]
                A[:, p, :] = c[:, None] * rp - (s * ph)[:, None] * rq
                A[:, q, :] = s[:, None] * rp + (c * ph)[:, None] * rq
                A[rot, p, q] = 0.0
                A[rot, q, p] = 0.0
                A[:, p, p] = A[:, p, p].real
                A[:, q, q] = A[:, q, q].real

                vp = V[:, :, p].copy()
                vq = V[:, :, q]
                V[:, :, p] = c[:, None] * vp - (s * cph)[:, None] * vq
                V[:, :, q] = s[:, None] * vp + (c * cph)[:, None] * vq

    w = np.real(np.diagonal(A, axis1=1, axis2=2))
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(shape[:-1]), V.reshape(shape), sweeps


def hermitian_eigen(matrix) -> EigenDecomposition:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("hermitian_eigen expects a single n x n matrix")
    w, v, sweeps = eigh_jacobi(m)
    return EigenDecomposition(Spectrum(w), v, sweeps)


def sigma_of_matrix(matrix, k: int):
    w, _, _ = eigh_jacobi(matrix)
    return sigma(w, k)


def matrix_sigma_first(matrix, k: int) -> np.ndarray:
    """Hermitian matrix G with d sigma_k(A) = tr(G dA); batched over leading axes."""
    w, v, _ = eigh_jacobi(matrix)
    f = sigma_grad(w, k)
    return (v * f[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def spectral_second_form(lam, k: int, W) -> float:
    """Second variation of sigma_k at diag(lam) paired with W.

    sum_{i != j} sigma_{k-2}(lam|ij) w_ii conj(w_jj) - sum_{p != q} sigma_{k-2}(lam|pq) |w_pq|^2.
    The divided difference (f_p - f_q)/(lam_p - lam_q) is replaced by its closed
    form -sigma_{k-2}(lam|pq), so repeated eigenvalues are allowed.
    """
    lam = _vals(lam)
    n = lam.shape[-1]
    if not 2 <= k <= n:
        raise ValueError(f"spectral_second_form needs 2 <= k <= n, got k={k}, n={n}")
    W = np.asarray(W, dtype=complex)
    C = sigma_pair_matrix(lam, k)
    d = np.diagonal(W, axis1=-2, axis2=-1)
    diag_part = np.einsum("...ij,...i,...j->...", C, d, np.conj(d))
    off_part = np.einsum("...pq,...pq->...", C, np.abs(W) ** 2)
    val = diag_part - off_part
    mag = np.abs(diag_part) + np.abs(off_part)
    if np.any(np.abs(val.imag) > 1e-12 * (mag + 1e-300)):
        raise FloatingPointError("second form has a non-negligible imaginary part")
    res = val.real
    return float(res) if np.ndim(res) == 0 else res


def binom(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0
