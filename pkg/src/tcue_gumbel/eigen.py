"""Dense eigenvalues of a general complex matrix.

Householder reduction to upper Hessenberg form, then single-shift QR
iteration with Wilkinson shifts and deflation on small subdiagonals.
Only eigenvalues are formed (no Schur vectors), so each QR sweep touches
just the active diagonal block.  The kernels are compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

__all__ = ["EigenResult", "EigenConvergenceError", "complex_eigenvalues", "hessenberg"]

_EPS = np.finfo(float).eps
MAX_SWEEPS_PER_EIGENVALUE = 30


class EigenConvergenceError(ArithmeticError):
    """QR iteration did not converge within its sweep budget."""


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    residual_trace: float
    residual_trace2: float
    sweeps: int
    converged: bool

    def raise_if_failed(self) -> "EigenResult":
        if not self.converged:
            raise EigenConvergenceError(f"no convergence after {self.sweeps} QR sweeps")
        return self


@numba.njit(cache=True)
def _hessenberg_inplace(H):
    p = H.shape[0]
    for k in range(p - 2):
        x = H[k + 1 :, k].copy()
        norm = np.sqrt(np.sum(np.abs(x) ** 2))
        if norm == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0 + 0.0j
        x[0] = x0 + phase * norm  # v = x - alpha e1 with alpha = -phase * norm
        vnorm = np.sqrt(np.sum(np.abs(x) ** 2))
        v = x / vnorm
        vh = np.conj(v)
        # H <- P H P with P = I - 2 v v^H acting on rows/cols k+1..
        m = v.size
        for j in range(k, p):
            acc = 0.0j
            for i in range(m):
                acc += vh[i] * H[k + 1 + i, j]
            for i in range(m):
                H[k + 1 + i, j] -= 2.0 * v[i] * acc
        for i in range(p):
            acc = 0.0j
            for j in range(m):
                acc += H[i, k + 1 + j] * v[j]
            for j in range(m):
                H[i, k + 1 + j] -= 2.0 * acc * vh[j]
        H[k + 2 :, k] = 0.0
    return H


@numba.njit(cache=True)
def _wilkinson(a, b, c, d):
    half_tr = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    mu1 = half_tr + disc
    mu2 = half_tr - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


@numba.njit(cache=True)
def _qr_eigenvalues(H, max_sweeps):
    p = H.shape[0]
    eig = np.empty(p, dtype=np.complex128)
    cs = np.empty(p, dtype=np.float64)
    sn = np.empty(p, dtype=np.complex128)
    hi = p - 1
    sweeps = 0
    its = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            scale = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if scale == 0.0:
                scale = 1.0
            if abs(H[lo, lo - 1]) <= _EPS * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            for i in range(hi + 1):
                eig[i] = np.nan
            return eig, sweeps, False
        if its > 0 and its % 10 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        for i in range(lo, hi + 1):
            H[i, i] -= mu
        for k in range(lo, hi):
            a = H[k, k]
            b = H[k + 1, k]
            r = np.hypot(abs(a), abs(b))
            if r == 0.0:
                c, s = 1.0, 0.0j
            elif a == 0:
                c, s = 0.0, 1.0 + 0.0j
            else:
                c = abs(a) / r
                s = (a / abs(a)) * np.conj(b) / r
            cs[k] = c
            sn[k] = s
            for j in range(k, hi + 1):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = c * t1 + s * t2
                H[k + 1, j] = -np.conj(s) * t1 + c * t2
        for k in range(lo, hi):
            c = cs[k]
            s = sn[k]
            for i in range(lo, k + 2):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = c * t1 + np.conj(s) * t2
                H[i, k + 1] = -s * t1 + c * t2
        for i in range(lo, hi + 1):
            H[i, i] += mu
        sweeps += 1
        its += 1
    return eig, sweeps, True


def hessenberg(A) -> np.ndarray:
    """Upper Hessenberg matrix unitarily similar to ``A``."""
    H = np.array(A, dtype=np.complex128, copy=True, order="C")
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    return _hessenberg_inplace(H)


def complex_eigenvalues(A) -> EigenResult:
    """All eigenvalues of the square complex matrix ``A``.

    Non-convergence after ``30 p`` sweeps is reported through
    ``converged=False`` (unconverged eigenvalues are NaN); call
    :meth:`EigenResult.raise_if_failed` to turn it into an exception.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    p = A.shape[0]
    H = hessenberg(A)
    eig, sweeps, ok = _qr_eigenvalues(H, MAX_SWEEPS_PER_EIGENVALUE * p)
    tr = np.trace(A)
    tr2 = np.sum(A * A.T)  # tr(A^2) without forming the product
    res1 = float(abs(np.sum(eig) - tr)) if ok else float("nan")
    res2 = float(abs(np.sum(eig * eig) - tr2)) if ok else float("nan")
    return EigenResult(eig, res1, res2, int(sweeps), bool(ok))
