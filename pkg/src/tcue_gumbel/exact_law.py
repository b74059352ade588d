"""Exact finite-n distribution of the rescaled spectral radius.

The squared eigenvalue moduli of a truncated Haar unitary have the same
maximum as independent ``Y_j ~ Beta(j, n - p)``, ``j = 1..p``.  Hence

    P(max_j Y_j <= t) = prod_{a=1}^{p} I_t(a, n - p),

and the CDFs of W_n and X_n follow by choosing ``t = beta_n(x)`` or
``t = (A_n + B_n x)^2``.

Evaluation is O(p) per point.  Survival probabilities
``S_a = 1 - I_t(a, m)`` satisfy ``S_{a+1} = S_a + d_a`` with
``d_a = t^a (1-t)^m / (a B(a, m)) > 0``, so the ladder is a running sum of
positive terms and never cancels.  ``log d_a`` is advanced by its ratio
recurrence and re-anchored by direct evaluation every ``RESYNC`` steps.
Blocks whose terms all sit below ``exp(-800)`` are skipped.  Where the
survival exceeds one half the complementary CDF is rebuilt from the top by
the same positive terms, starting from a direct ``I_t(p, m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .scaling import (
    CutPoints,
    EnsembleParams,
    ScalingConstants,
    beta_n,
    cut_points,
    derive_constants,
    x_threshold,
)
from .special_functions import log_beta_prefactor, log_beta_survival, log_reg_inc_beta

__all__ = ["ExactLaw", "BetaLadder", "beta_ladder", "beta_max_log_cdf", "RESYNC", "LOG_UNDERFLOW"]

RESYNC = 1024
LOG_UNDERFLOW = -700.0
_LOG_NEGLIGIBLE = -800.0

Law = Literal["W", "X"]


@dataclass(frozen=True)
class BetaLadder:
    """Survivals ``S_a = P(Beta(a, m) >= t)`` for ``a = start..p``.

    Indices below ``start`` carry survivals under ``exp(-800)`` and are
    treated as zero.
    """

    t: float
    p: int
    m: int
    start: int
    survival: np.ndarray
    log_cdf_terms: np.ndarray  # ln I_t(a, m) for a = start..p

    @property
    def log_cdf(self) -> float:
        return float(np.sum(self.log_cdf_terms))

    def survival_at(self, a: int) -> float:
        if a < self.start:
            return 0.0
        return float(self.survival[a - self.start])


def _log_step(t: float, a: int, m: int) -> float:
    # ln d_a = ln[t^a (1-t)^m / (a B(a, m))]
    return log_beta_prefactor(t, a, m) - math.log(a)


def beta_ladder(t: float, p: int, m: int, resync: int = RESYNC) -> BetaLadder:
    """Build the survival ladder for a threshold ``0 < t < 1``."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"beta_ladder requires 0 < t < 1, got {t!r}")
    log_t = math.log(t)
    anchors = np.arange(1, p + 1, resync)
    anchor_logd = np.array([_log_step(t, int(a), m) for a in anchors])

    # log d_a is unimodal (concave) in a; locate the first block that can matter
    mode = (t * m - 1.0) / (1.0 - t)
    relevant = anchor_logd > _LOG_NEGLIGIBLE
    relevant[:-1] |= relevant[1:]
    block = int(np.argmax(relevant)) if relevant.any() else len(anchors) - 1
    if 1.0 <= mode <= p:
        block = min(block, int((mode - 1.0) // resync))
    start = int(anchors[block])

    a = np.arange(start, p + 1, dtype=float)
    ratio = log_t + np.log1p((m - 1.0) / (a[:-1] + 1.0))
    csum = np.concatenate(([0.0], np.cumsum(ratio)))
    block_of = (np.arange(a.size) + (start - 1)) // resync
    block_start = block_of * resync + 1 - start
    logd = anchor_logd[block_of] + (csum - csum[block_start])
    d = np.exp(logd)

    s_start = math.exp(log_beta_survival(t, start, m))
    survival = s_start + np.concatenate(([0.0], np.cumsum(d[:-1])))
    np.minimum(survival, 1.0, out=survival)

    with np.errstate(divide="ignore"):
        terms = np.log1p(-survival)
    if survival[-1] > 0.5:
        # I_t(a, m) = I_t(p, m) + sum_{k=a}^{p-1} d_k, accumulated in log space
        log_top = log_reg_inc_beta(t, p, m)
        upper = np.flatnonzero(survival > 0.5)
        lo = int(upper[0])
        rev = np.logaddexp.accumulate(logd[lo:-1][::-1])[::-1]
        log_lower = np.logaddexp(log_top, np.concatenate((rev, [-np.inf])))
        terms[lo:] = np.where(survival[lo:] > 0.5, log_lower, terms[lo:])
    return BetaLadder(t=t, p=p, m=m, start=start, survival=survival, log_cdf_terms=terms)


def beta_max_log_cdf(t: float, p: int, m: int) -> float:
    """ln P(max_{a<=p} Beta(a, m) <= t)."""
    if t <= 0.0:
        return -math.inf
    if t >= 1.0:
        return 0.0
    return beta_ladder(t, p, m).log_cdf


@dataclass(frozen=True)
class ExactLaw:
    """Exact CDF of W_n (``law="W"``) or X_n (``law="X"``).

    Immutable; evaluation methods are pure and safe to call from many
    threads at once.
    """

    params: EnsembleParams
    constants: ScalingConstants
    cuts: CutPoints
    law: Law = "W"

    @classmethod
    def from_params(cls, n: int, p: int, law: Law = "W", **kwargs) -> "ExactLaw":
        params = EnsembleParams(n, p, **kwargs)
        constants = derive_constants(params)
        return cls(params, constants, cut_points(constants), law)

    def __post_init__(self):
        if self.law not in ("W", "X"):
            raise ValueError(f"law must be 'W' or 'X', got {self.law!r}")

    def with_law(self, law: Law) -> "ExactLaw":
        return ExactLaw(self.params, self.constants, self.cuts, law)

    @property
    def lower(self) -> float:
        """Largest x with CDF 0."""
        return self.cuts.y0 if self.law == "W" else self.cuts.y3

    @property
    def upper(self) -> float:
        """Smallest x with CDF 1."""
        return self.cuts.y2 if self.law == "W" else self.cuts.y4

    def threshold(self, x: float) -> float:
        """Threshold on max |z_j|^2 corresponding to ``x``, clamped to [0, 1]."""
        if self.law == "W":
            t = float(beta_n(self.constants, x))
        else:
            root = float(x_threshold(self.constants, x))
            t = root * root if root > 0.0 else 0.0
        return min(max(t, 0.0), 1.0)

    def log_cdf(self, x: float) -> float:
        t = self.threshold(x)
        return beta_max_log_cdf(t, self.params.p, self.params.m)

    def cdf(self, x):
        """CDF at ``x`` (scalar or array); values below ``exp(-700)`` flush to 0."""
        if np.ndim(x) == 0:
            return self._cdf_scalar(float(x))
        xs = np.asarray(x, dtype=float)
        return np.array([self._cdf_scalar(float(v)) for v in xs.ravel()]).reshape(xs.shape)

    def _cdf_scalar(self, x: float) -> float:
        lc = self.log_cdf(x)
        return 0.0 if lc < LOG_UNDERFLOW else math.exp(lc)

    def survival_cdf(self, x: float) -> float:
        """1 - CDF at ``x`` without cancellation."""
        return -math.expm1(self.log_cdf(x))

    def log_survival_a(self, j: int, x: float) -> float:
        """ln a_n(j, x) = ln P(Y_{p-j} >= threshold(x))."""
        p = self.params.p
        if not 0 <= j <= p - 1:
            raise ValueError(f"j must lie in [0, {p - 1}], got {j}")
        t = self.threshold(x)
        return log_beta_survival(t, p - j, self.params.m)

    def survival_a(self, j: int, x: float) -> float:
        return min(max(math.exp(self.log_survival_a(j, x)), 0.0), 1.0)

    def ladder(self, x: float) -> BetaLadder | None:
        """Full survival ladder at ``x``, or None when the threshold is 0 or 1."""
        t = self.threshold(x)
        if t <= 0.0 or t >= 1.0:
            return None
        return beta_ladder(t, self.params.p, self.params.m)

    def alpha_n(self, x: float) -> float:
        """``-sum_j ln(1 - a_n(j, x))``; ``math.inf`` at or below the lower cut."""
        return -self.log_cdf(x)
