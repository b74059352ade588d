"""Deterministic constants and changes of variable for the truncated CUE.

Given the ambient dimension ``n`` and truncation size ``p`` this module
produces ``s_n = n p / (n - p)``, the centering ``a_n`` and scale
``b_n = (log s_n)^{-1/2}`` of the spectral radius, the window constants
``ell1 = log log n / 2`` and ``ell2 = log(sqrt(2 pi) log s_n)``, the
threshold maps ``beta_n`` (squared-modulus threshold of W_n) and
``(A_n + B_n x)`` (modulus threshold of X_n), and the cut points where
those thresholds hit 0 or 1.

All logarithms are natural.  The affine maps accept scalars or numpy
arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RatioWarning",
    "EnsembleParams",
    "ScalingConstants",
    "CutPoints",
    "derive_constants",
    "beta_n",
    "u_n",
    "x_threshold",
    "x_threshold_squared",
    "cut_points",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)


class RatioWarning(UserWarning):
    """p/n lies outside the configured [h1, h2] band."""


@dataclass(frozen=True)
class EnsembleParams:
    """The pair (n, p): top-left p x p block of an n x n Haar unitary."""

    n: int
    p: int
    h1: float = 0.1
    h2: float = 0.9

    def __post_init__(self):
        for name in ("n", "p"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 1 <= self.p < self.n:
            raise ValueError(f"need 1 <= p < n, got n={self.n}, p={self.p}")
        if not 0.0 < self.h1 < self.h2 < 1.0:
            raise ValueError(f"need 0 < h1 < h2 < 1, got {self.h1}, {self.h2}")

    @property
    def ratio(self) -> float:
        return self.p / self.n

    @property
    def outside_ratio_band(self) -> bool:
        return not self.h1 <= self.ratio <= self.h2

    @property
    def m(self) -> int:
        """Second Beta parameter n - p."""
        return self.n - self.p


@dataclass(frozen=True)
class ScalingConstants:
    params: EnsembleParams
    s_n: float
    log_s_n: float
    a_n: float
    b_n: float
    m_n: int
    ell1: float
    ell2: float

    @property
    def sqrt_s_n(self) -> float:
        return math.sqrt(self.s_n)


@dataclass(frozen=True)
class CutPoints:
    y0: float  # beta_n(y0) = 0
    y1: float  # a_n + b_n y1 = 0, so beta_n(y1) = p/n
    y2: float  # beta_n(y2) = 1
    y3: float  # A_n + B_n y3 = 0
    y4: float  # A_n + B_n y4 = 1


def derive_constants(params: EnsembleParams) -> ScalingConstants:
    """Compute every scaling constant for ``params``.

    Raises ``ValueError`` for ``n < 3`` (``log log n`` must be positive).
    A :class:`RatioWarning` is emitted when ``p/n`` is outside ``[h1, h2]``;
    the formulas stay well defined there.
    """
    n, p = params.n, params.p
    if n < 3:
        raise ValueError(f"n must be >= 3 so that log log n > 0, got n={n}")
    if params.outside_ratio_band:
        warnings.warn(
            f"p/n = {params.ratio:.4g} outside [{params.h1}, {params.h2}]",
            RatioWarning,
            stacklevel=2,
        )
    s_n = n * p / (n - p)
    log_s = math.log(s_n)
    root = math.sqrt(log_s)
    ell2 = math.log(SQRT_2PI * log_s)
    return ScalingConstants(
        params=params,
        s_n=s_n,
        log_s_n=log_s,
        a_n=root - ell2 / root,
        b_n=1.0 / root,
        m_n=n - p,
        ell1=0.5 * math.log(math.log(n)),
        ell2=ell2,
    )


def beta_n(c: ScalingConstants, x):
    """Squared-modulus threshold ``p/n (1 + (a_n + b_n x)/sqrt(s_n))`` of W_n."""
    ratio = c.params.p / c.params.n
    return ratio * (1.0 + (c.a_n + c.b_n * np.asarray(x, dtype=float)) / c.sqrt_s_n)


def u_n(c: ScalingConstants, j, x):
    """``j / sqrt(s_n) + a_n + b_n x``."""
    return np.asarray(j, dtype=float) / c.sqrt_s_n + c.a_n + c.b_n * np.asarray(x, dtype=float)


def x_threshold(c: ScalingConstants, x):
    """Modulus threshold ``A_n + B_n x = sqrt(p/n) (1 + (a_n + b_n x)/(2 sqrt(s_n)))`` of X_n."""
    ratio = c.params.p / c.params.n
    return math.sqrt(ratio) * (1.0 + (c.a_n + c.b_n * np.asarray(x, dtype=float)) / (2.0 * c.sqrt_s_n))


def x_threshold_squared(c: ScalingConstants, x):
    """``(A_n + B_n x)^2`` written as ``beta_n(x) + (p/n)(a_n + b_n x)^2 / (4 s_n)``.

    The second form makes the dominance over ``beta_n`` explicit; both
    agree to rounding.
    """
    ratio = c.params.p / c.params.n
    shift = c.a_n + c.b_n * np.asarray(x, dtype=float)
    return beta_n(c, x) + ratio * shift * shift / (4.0 * c.s_n)


def cut_points(c: ScalingConstants) -> CutPoints:
    n, p = c.params.n, c.params.p
    root_s = c.sqrt_s_n
    y0 = -(root_s + c.a_n) / c.b_n
    y1 = -c.log_s_n + math.log(SQRT_2PI * c.log_s_n)
    y2 = (math.sqrt((n - p) * n / p) - c.a_n) / c.b_n
    y3 = -(2.0 * root_s + c.a_n) / c.b_n
    y4 = (2.0 * root_s * (math.sqrt(n / p) - 1.0) - c.a_n) / c.b_n
    return CutPoints(y0=y0, y1=y1, y2=y2, y3=y3, y4=y4)
