"""Leading-order asymptotic evaluators and their numerical confrontation.

Every evaluator returns the leading term of an expansion with the
unquantified ``O(.)`` factors dropped.  Those factors come back only as
tolerance bands inside :class:`LemmaCheckReport`, each carrying an explicit
implementation constant:

========  ==========================================  =====================
check     compares                                    band
========  ==========================================  =====================
L2_2      Gaussian tail expansion vs quadrature       3(|(r-1)(r-3)|+1)/z^4
L2_3      ``a_n_asym`` vs exact survival              5(u^3/sqrt(n) + u^2 j/n + 1/u^2)
L2_4      exact survival / ``a_n_bound``              e^10 (ratio, not error)
L2_5      ``tail_sum_asym`` vs direct summation       3(1/u^2 + u/sqrt(n))
ALPHA     ``alpha_asym`` vs exact ``alpha_n``         10/log n
KAPPA     ``kappa_n`` vs ``exp(-x) - alpha_n``        0.5 (relative to kappa)
CRU       Haar-truncation draws vs exact CDF (KS)     1.63/sqrt(N)
========  ==========================================  =====================

Points outside a formula's natural regime are not rejected; they are
marked in ``LemmaCheckReport.regime_flags``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exact_law import ExactLaw
from .scaling import SQRT_2PI, ScalingConstants, u_n
from .special_functions import TailMethod, asymptotic_band_constant, gaussian_tail

__all__ = [
    "LemmaId",
    "LemmaCheckReport",
    "LeadingRates",
    "C_SURVIVAL",
    "C_BOUND",
    "C_TAIL_SUM",
    "C_KAPPA",
    "a_n_asym",
    "a_n_bound",
    "tail_sum_asym",
    "direct_tail_sum",
    "alpha_asym",
    "kappa_n",
    "kappa_roots",
    "leading_rates",
    "survival_regime_ok",
    "survival_band",
    "window",
    "check_gaussian_tail",
    "check_survival",
    "check_survival_bound",
    "check_tail_sum",
    "check_alpha",
    "check_kappa",
]

C_SURVIVAL = 5.0
C_BOUND = math.exp(10.0)
C_TAIL_SUM = 3.0
C_KAPPA = 0.5


class LemmaId(str, enum.Enum):
    L2_2 = "L2_2"
    L2_3 = "L2_3"
    L2_4 = "L2_4"
    L2_5 = "L2_5"
    KAPPA = "KAPPA"
    ALPHA = "ALPHA"
    CRU = "CRU"


@dataclass(frozen=True)
class LemmaCheckReport:
    """Pointwise comparison of an exact quantity with its leading term.

    ``pass_`` is true iff every ``|relative_error|`` is within its
    ``tolerance_band``.  For ``L2_4`` the "relative error" column holds the
    ratio exact/bound, since the statement is an inequality.
    """

    lemma_id: LemmaId
    grid: list
    exact: list[float]
    approx: list[float]
    relative_error: list[float]
    tolerance_band: list[float]
    regime_flags: list[bool] = field(default_factory=list)

    @property
    def pass_(self) -> bool:
        return all(
            math.isfinite(e) and abs(e) <= b for e, b in zip(self.relative_error, self.tolerance_band)
        )

    @property
    def worst_margin(self) -> float:
        """max |error| / band; at most 1 when the check passes."""
        return max(abs(e) / b for e, b in zip(self.relative_error, self.tolerance_band))

    def rows(self) -> list[dict]:
        out = []
        for i, g in enumerate(self.grid):
            out.append(
                {
                    "point": list(g) if isinstance(g, tuple) else g,
                    "exact": self.exact[i],
                    "approx": self.approx[i],
                    "relative_error": self.relative_error[i],
                    "band": self.tolerance_band[i],
                    "in_regime": self.regime_flags[i] if self.regime_flags else True,
                }
            )
        return out

    def to_dict(self) -> dict:
        return {"lemma_id": self.lemma_id.value, "pass": self.pass_, "rows": self.rows()}


class LeadingRates(NamedTuple):
    ks_refined: float
    ks_headline: float
    w1_refined: float
    w1_headline: float


# ---------------------------------------------------------------------------
# evaluators


def a_n_asym(c: ScalingConstants, j: int, x: float) -> float:
    """Leading term ``exp(-u^2/2) / (sqrt(2 pi) u)`` of the survival ``a_n(j, x)``."""
    u = float(u_n(c, j, x))
    if u <= 0.0:
        raise ValueError(f"u_n(j, x) must be positive, got {u!r}")
    return math.exp(-0.5 * u * u) / (SQRT_2PI * u)


def survival_regime_ok(c: ScalingConstants, j: int, x: float) -> bool:
    """True when ``1 <= u_n(j, x) <= n^(1/6)`` and ``j <= n^(3/5)``."""
    n = c.params.n
    u = float(u_n(c, j, x))
    # j <= n^(3/5) compared exactly in integers
    return 1.0 <= u <= n ** (1.0 / 6.0) and 0 <= j and int(j) ** 5 <= n**3


def a_n_bound(c: ScalingConstants, j: int, x: float) -> float:
    """Exponential bound ``sqrt(n) exp(-(j/sqrt(s_n)) (a_n + b_n x))`` (no constant)."""
    return math.sqrt(c.params.n) * math.exp(-(j / c.sqrt_s_n) * (c.a_n + c.b_n * x))


def tail_sum_asym(c: ScalingConstants, L: int, x: float) -> float:
    """Closed form ``sqrt(s_n) exp(-u^2/2) / u^2`` with ``u = u_n(L, x)``."""
    u = float(u_n(c, L, x))
    if u <= 1.0:
        raise ValueError(f"u_n(L, x) must exceed 1, got {u!r}")
    return c.sqrt_s_n * math.exp(-0.5 * u * u) / (u * u)


def direct_tail_sum(c: ScalingConstants, L: int, x: float, rel_tol: float = 1e-16, chunk: int = 4096) -> float:
    """``sum_{j >= L} exp(-u_n(j,x)^2/2) / u_n(j,x)`` by explicit summation.

    Consecutive terms shrink at least by ``q_J = exp(-u_J / sqrt(s_n))`` once
    ``u_J > 0``, so after index ``J`` the remainder is at most
    ``term_J q_J / (1 - q_J)``.  Summation stops when that bound falls below
    ``rel_tol`` times the running total.
    """
    if float(u_n(c, L, x)) <= 0.0:
        raise ValueError("direct_tail_sum needs u_n(L, x) > 0")
    step = 1.0 / c.sqrt_s_n
    total = 0.0
    start = L
    while True:
        j = np.arange(start, start + chunk, dtype=float)
        u = u_n(c, j, x)
        terms = np.exp(-0.5 * u * u) / u
        partial = np.cumsum(terms) + total
        q = np.exp(-u * step)
        bound = terms * q / (1.0 - q)
        done = np.flatnonzero(bound <= rel_tol * partial)
        if done.size:
            return float(partial[done[0]])
        total = float(partial[-1])
        start += chunk


def alpha_asym(c: ScalingConstants, x: float) -> float:
    """``(1 + tau/L)^-2 exp(-x - tau^2/(2L))`` with ``tau = x - ell2``, ``L = log s_n``."""
    tau = x - c.ell2
    base = 1.0 + tau / c.log_s_n
    if base <= 0.0:
        raise ValueError(f"alpha_asym undefined for x <= ell2 - log s_n (x={x!r})")
    return math.exp(-x - tau * tau / (2.0 * c.log_s_n)) / (base * base)


def kappa_n(c: ScalingConstants, x):
    """``exp(-x) (4 tau + tau^2) / (2 log s_n)``, the leading part of ``exp(-x) - alpha_n(x)``."""
    tau = np.asarray(x, dtype=float) - c.ell2
    out = np.exp(-np.asarray(x, dtype=float)) * (4.0 * tau + tau * tau) / (2.0 * c.log_s_n)
    return float(out) if np.ndim(out) == 0 else out


def kappa_roots(c: ScalingConstants) -> tuple[float, float]:
    return (c.ell2 - 4.0, c.ell2)


def leading_rates(c: ScalingConstants) -> LeadingRates:
    """Refined (``ell2``, ``log s_n``) and headline (``log log n``, ``log n``) rate constants."""
    log_n = math.log(c.params.n)
    loglog = math.log(log_n)
    ks_refined = c.ell2**2 / (2.0 * math.e * c.log_s_n)
    w1_refined = c.ell2**2 / (2.0 * c.log_s_n)
    return LeadingRates(
        ks_refined=ks_refined,
        ks_headline=loglog**2 / (2.0 * math.e * log_n),
        w1_refined=w1_refined,
        w1_headline=loglog**2 / (2.0 * log_n),
    )


# ---------------------------------------------------------------------------
# checks


def _relerr(exact: float, approx: float) -> float:
    return approx / exact - 1.0 if exact != 0.0 else math.inf


def check_gaussian_tail(
    z_values: Sequence[float] = (6.0, 8.0, 10.0, 12.0),
    r_values: Sequence[float] = (0.0, 1.0, 2.0, 3.0, 4.0),
) -> LemmaCheckReport:
    grid, exact, approx, err, band = [], [], [], [], []
    for z in z_values:
        for r in r_values:
            q = gaussian_tail(z, r, TailMethod.QUADRATURE).value
            a = gaussian_tail(z, r, TailMethod.ASYMPTOTIC).value
            grid.append((float(z), float(r)))
            exact.append(q)
            approx.append(a)
            err.append(_relerr(q, a))
            band.append(asymptotic_band_constant(r) * z**-4)
    return LemmaCheckReport(LemmaId.L2_2, grid, exact, approx, err, band, [z >= 3 for z, _ in grid])


def survival_band(c: ScalingConstants, j: int, u: float) -> float:
    n = c.params.n
    return C_SURVIVAL * (u**3 / math.sqrt(n) + u * u * j / n + u**-2)


def check_survival(
    law: ExactLaw,
    j_values: Sequence[int] = (0, 10, 100, 1000),
    u_values: Sequence[float] = tuple(np.linspace(3.0, 6.0, 13)),
) -> LemmaCheckReport:
    """Compare the survival leading term with the exact survival at prescribed ``u``."""
    c = law.constants
    grid, exact, approx, err, band, flags = [], [], [], [], [], []
    for j in j_values:
        for u in u_values:
            x = (u - j / c.sqrt_s_n - c.a_n) / c.b_n
            e = law.survival_a(int(j), x)
            a = a_n_asym(c, int(j), x)
            grid.append((int(j), float(x)))
            exact.append(e)
            approx.append(a)
            err.append(_relerr(e, a))
            band.append(survival_band(c, int(j), float(u)))
            flags.append(survival_regime_ok(c, int(j), x))
    return LemmaCheckReport(LemmaId.L2_3, grid, exact, approx, err, band, flags)


def check_survival_bound(
    law: ExactLaw,
    j_values: Sequence[int] = (100, 316, 999),
    x_values: Sequence[float] = (1.0, 5.0),
    constant: float = C_BOUND,
) -> LemmaCheckReport:
    """Ratio of exact survival to the exponential bound; passes when below ``constant``."""
    c = law.constants
    grid, exact, approx, ratio, band, flags = [], [], [], [], [], []
    for j in j_values:
        for x in x_values:
            e = law.survival_a(int(j), float(x))
            b = a_n_bound(c, int(j), float(x))
            grid.append((int(j), float(x)))
            exact.append(e)
            approx.append(b)
            ratio.append(e / b)
            band.append(constant)
            flags.append(0 <= j < c.params.p and x > 0)
    return LemmaCheckReport(LemmaId.L2_4, grid, exact, approx, ratio, band, flags)


def check_tail_sum(c: ScalingConstants, L: int = 0, x: float | None = None) -> LemmaCheckReport:
    x = c.ell2 if x is None else float(x)
    u = float(u_n(c, L, x))
    d = direct_tail_sum(c, L, x)
    a = tail_sum_asym(c, L, x)
    band = C_TAIL_SUM * (u**-2 + u / math.sqrt(c.params.n))
    return LemmaCheckReport(LemmaId.L2_5, [(int(L), x)], [d], [a], [_relerr(d, a)], [band], [u > 1.0])


def window(c: ScalingConstants, points: int) -> np.ndarray:
    """Uniform grid on ``[-ell1, ell2]``."""
    return np.linspace(-c.ell1, c.ell2, points)


def check_alpha(law: ExactLaw, x_values: Sequence[float] | None = None) -> LemmaCheckReport:
    c = law.constants
    xs = window(c, 41) if x_values is None else np.asarray(x_values, dtype=float)
    band = 10.0 / math.log(c.params.n)
    grid, exact, approx, err = [], [], [], []
    for x in xs:
        e = law.with_law("W").alpha_n(float(x))
        a = alpha_asym(c, float(x))
        grid.append(float(x))
        exact.append(e)
        approx.append(a)
        err.append(_relerr(e, a))
    return LemmaCheckReport(LemmaId.ALPHA, grid, exact, approx, err, [band] * len(grid), [True] * len(grid))


def check_kappa(
    law: ExactLaw,
    x_values: Sequence[float] | None = None,
    root_exclusion: float = 0.2,
) -> LemmaCheckReport:
    """Compare ``exp(-x) - alpha_n(x)`` with ``kappa_n(x)``; error is relative to ``|kappa_n|``."""
    c = law.constants
    xs = window(c, 81) if x_values is None else np.asarray(x_values, dtype=float)
    roots = kappa_roots(c)
    xs = [float(x) for x in xs if all(abs(x - r) >= root_exclusion for r in roots)]
    w = law.with_law("W")
    grid, exact, approx, err = [], [], [], []
    for x in xs:
        e = math.exp(-x) - w.alpha_n(x)
        k = kappa_n(c, x)
        grid.append(x)
        exact.append(e)
        approx.append(k)
        err.append((e - k) / abs(k))
    return LemmaCheckReport(LemmaId.KAPPA, grid, exact, approx, err, [C_KAPPA] * len(grid), [True] * len(grid))
