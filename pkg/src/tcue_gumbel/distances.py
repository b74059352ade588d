"""Kolmogorov and Wasserstein-1 distances to the standard Gumbel law.

The exact laws live on a bounded interval ``[lower, upper]`` whose length
grows like ``sqrt(n log n)``, while the CDF difference is numerically zero
far from the bulk.  Both distances therefore work on an *effective window*:
the interval outside of which ``|F - Lambda|`` is certified below
``EFFECTIVE_EPS`` because both CDFs sit within that distance of 0 (left) or
1 (right).  The window is never wider than ``[lower - 6, upper + 6]``.

W1 tails outside the window are added analytically::

    int_{-inf}^{x} Lambda     = E1(exp(-x))
    int_{x}^{inf} (1-Lambda)  = Ein(exp(-x))

and the part of the exact law beyond the window enters only the error
estimate, through ``F(x_lo) (x_lo - lower)`` and ``(1 - F(x_hi)) (upper - x_hi)``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Protocol

import numpy as np
from scipy import integrate, optimize, special

from .asymptotics import leading_rates
from .exact_law import ExactLaw
from .special_functions import EULER_GAMMA

__all__ = [
    "Metric",
    "GumbelReference",
    "DistanceReport",
    "EFFECTIVE_EPS",
    "KS_GRID_POINTS",
    "gumbel_lower_integral",
    "gumbel_upper_integral",
    "evaluate_log_cdf",
    "effective_window",
    "ks_distance",
    "w1_distance",
    "w1_between_laws",
    "distance",
]

EFFECTIVE_EPS = 1e-18
KS_GRID_POINTS = 2048
KS_XTOL = 1e-8
W1_EPSABS = 1e-10
_PAD = 6.0
_LOG_FLOOR = -1e6


class Metric(str, enum.Enum):
    KS = "KS"
    W1 = "W1"
    W1_XW = "W1_XW"


class CDFLike(Protocol):
    lower: float
    upper: float

    def log_cdf(self, x: float) -> float: ...


@dataclass(frozen=True)
class GumbelReference:
    """Gumbel law ``exp(-exp(-(x - loc)))``; ``loc = 0`` is the standard one.

    ``lower``/``upper`` bracket the numerically non-degenerate range so the
    reference can also stand in for a law in the distance routines.
    """

    loc: float = 0.0

    @property
    def lower(self) -> float:
        return self.loc - 10.0

    @property
    def upper(self) -> float:
        return self.loc + 60.0

    def log_cdf(self, x: float) -> float:
        return -math.exp(-(x - self.loc)) if x - self.loc > -700.0 else -math.inf

    def cdf(self, x):
        z = np.asarray(x, dtype=float) - self.loc
        with np.errstate(over="ignore"):
            out = np.exp(-np.exp(-z))
        return float(out) if np.ndim(out) == 0 else out

    def pdf(self, x):
        z = np.asarray(x, dtype=float) - self.loc
        with np.errstate(over="ignore"):
            out = np.exp(-z - np.exp(-z))
        return float(out) if np.ndim(out) == 0 else out

    def survival(self, x: float) -> float:
        return -math.expm1(-math.exp(-(x - self.loc))) if x - self.loc > -700.0 else 1.0


STANDARD_GUMBEL = GumbelReference()


@dataclass(frozen=True)
class DistanceReport:
    metric: Metric
    value: float
    argmax_x: float | None
    quadrature_error_estimate: float
    leading_refined: float
    leading_headline: float
    ratio_refined: float
    ratio_headline: float
    n: int | None = None
    p: int | None = None
    law: str | None = None
    window: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["metric"] = self.metric.value
        out["window"] = list(self.window) if self.window is not None else None
        return out


def gumbel_lower_integral(x: float) -> float:
    """``int_{-inf}^{x} exp(-exp(-t)) dt = E1(exp(-x))``."""
    if -x > 700.0:
        return 0.0
    return float(special.exp1(math.exp(-x)))


def gumbel_upper_integral(x: float) -> float:
    """``int_{x}^{inf} (1 - exp(-exp(-t))) dt = Ein(exp(-x))``.

    ``Ein(z) = sum_{k>=1} (-1)^(k+1) z^k / (k k!)``; the series is used for
    ``z <= 1`` and ``E1(z) + log z + gamma`` beyond.
    """
    if -x > 700.0:
        return math.inf
    z = math.exp(-x)
    if z > 1.0:
        return float(special.exp1(z)) + math.log(z) + EULER_GAMMA
    total, term, k = 0.0, z, 1
    while True:
        contrib = term / k
        total += contrib if k % 2 else -contrib
        if contrib <= 1e-17 * total:
            return total
        k += 1
        term *= z / k


def _log_gumbel(x: float) -> float:
    return -math.exp(-x) if x > -700.0 else -math.inf


def _log_sf(log_cdf: float) -> float:
    if log_cdf == 0.0:
        return -math.inf
    return math.log(-math.expm1(log_cdf))


def _log_cdf_chunk(args):
    law, xs = args
    return [law.log_cdf(float(x)) for x in xs]


def evaluate_log_cdf(law: CDFLike, xs, workers: int = 1) -> np.ndarray:
    """``law.log_cdf`` on every point of ``xs``; order-preserving across workers."""
    xs = np.asarray(xs, dtype=float)
    if workers <= 1 or xs.size < 2 * workers:
        return np.array([law.log_cdf(float(x)) for x in xs])
    chunks = np.array_split(xs, 4 * workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_log_cdf_chunk, [(law, c) for c in chunks]))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def _find_crossing(h, a: float, b: float) -> float:
    """Root of the increasing function ``h`` on ``[a, b]`` (endpoint if no sign change)."""
    fa, fb = h(a), h(b)
    if fa >= 0.0:
        return a
    if fb <= 0.0:
        return b
    return optimize.brentq(h, a, b, xtol=1e-9, rtol=1e-12)


def effective_window(law: CDFLike, reference: CDFLike | None = None, eps: float = EFFECTIVE_EPS) -> tuple[float, float]:
    """``[x_lo, x_hi]`` outside which both CDFs are within ``eps`` of 0 or 1."""
    ref = STANDARD_GUMBEL if reference is None else reference
    lo_bound = min(law.lower, ref.lower) - _PAD
    hi_bound = max(law.upper, ref.upper) + _PAD
    log_eps = math.log(eps)

    def lower_gap(x):
        v = max(law.log_cdf(x), ref.log_cdf(x))
        return max(v, _LOG_FLOOR) - log_eps

    def upper_gap(x):
        v = max(_log_sf(law.log_cdf(x)), _log_sf(ref.log_cdf(x)))
        return log_eps - max(v, _LOG_FLOOR)

    x_lo = _find_crossing(lower_gap, lo_bound, hi_bound)
    x_hi = _find_crossing(upper_gap, x_lo, hi_bound)
    return x_lo, x_hi


def _leading(law, metric: Metric) -> tuple[float, float]:
    constants = getattr(law, "constants", None)
    if constants is None:
        return math.nan, math.nan
    rates = leading_rates(constants)
    if metric is Metric.KS:
        return rates.ks_refined, rates.ks_headline
    return rates.w1_refined, rates.w1_headline


def _report(law, metric, value, argmax, err, window) -> DistanceReport:
    refined, headline = _leading(law, metric)
    params = getattr(law, "params", None)
    return DistanceReport(
        metric=metric,
        value=value,
        argmax_x=argmax,
        quadrature_error_estimate=err,
        leading_refined=refined,
        leading_headline=headline,
        ratio_refined=value / refined if refined else math.nan,
        ratio_headline=value / headline if headline else math.nan,
        n=params.n if params is not None else None,
        p=params.p if params is not None else None,
        law=getattr(law, "law", None),
        window=(float(window[0]), float(window[1])),
    )


def _signed_gap(law, ref, x: float) -> float:
    lf, lg = law.log_cdf(x), ref.log_cdf(x)
    return math.exp(lf) - math.exp(lg)


def ks_distance(
    law: CDFLike,
    reference: CDFLike | None = None,
    grid_points: int = KS_GRID_POINTS,
    xtol: float = KS_XTOL,
    workers: int = 1,
) -> DistanceReport:
    """``sup_x |F(x) - Lambda(x)|`` with its maximizer.

    A uniform grid on the effective window flags every local maximum of
    ``|F - Lambda|`` within a factor 1e-3 of the grid maximum; each is
    polished by golden-section search bracketed by its grid neighbours.
    """
    ref = STANDARD_GUMBEL if reference is None else reference
    x_lo, x_hi = effective_window(law, ref)
    xs = np.linspace(x_lo, x_hi, grid_points)
    lf = evaluate_log_cdf(law, xs, workers)
    lg = np.array([ref.log_cdf(float(x)) for x in xs])
    gap = np.abs(np.exp(lf) - np.exp(lg))
    best_i = int(np.argmax(gap))
    best_x, best = float(xs[best_i]), float(gap[best_i])
    if best == 0.0:
        return _report(law, Metric.KS, 0.0, best_x, EFFECTIVE_EPS, (x_lo, x_hi))

    def neg_gap(x: float) -> float:
        return -abs(_signed_gap(law, ref, x))

    inner = np.arange(1, grid_points - 1)
    peaks = inner[(gap[inner] >= gap[inner - 1]) & (gap[inner] >= gap[inner + 1]) & (gap[inner] >= 1e-3 * best)]
    for i in peaks:
        bracket = (float(xs[i - 1]), float(xs[i]), float(xs[i + 1]))
        try:
            res = optimize.minimize_scalar(neg_gap, bracket=bracket, method="golden", options={"xtol": xtol})
            x_star, val = float(res.x), -float(res.fun)
        except ValueError:
            # flat triple (equal gaps): keep the grid point
            x_star, val = float(xs[i]), float(gap[i])
        if val > best:
            best, best_x = val, x_star
    # edges of the window are not bracketed by golden search
    for i in (0, grid_points - 1):
        if gap[i] > best:
            best, best_x = float(gap[i]), float(xs[i])
    return _report(law, Metric.KS, best, best_x, EFFECTIVE_EPS, (x_lo, x_hi))


def _sign_breaks(diff_fn, xs: np.ndarray, values: np.ndarray) -> list[float]:
    out = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        out.append(optimize.brentq(diff_fn, float(xs[i]), float(xs[i + 1]), xtol=1e-12))
    return out


def _integrate_pieces(fn, edges: list[float]) -> tuple[float, float]:
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, e = integrate.quad(fn, a, b, epsabs=W1_EPSABS / len(edges), epsrel=0.0, limit=500)
        total += val
        err += e
    return total, err


def w1_distance(law: CDFLike, reference: CDFLike | None = None, scan_points: int = 257) -> DistanceReport:
    """``int |F(x) - Lambda(x)| dx``.

    The integrand is split at every sign change found on a ``scan_points``
    grid so each quadrature panel integrates a smooth function.
    """
    ref = STANDARD_GUMBEL if reference is None else reference
    x_lo, x_hi = effective_window(law, ref)

    def diff(x: float) -> float:
        return _signed_gap(law, ref, x)

    xs = np.linspace(x_lo, x_hi, scan_points)
    values = np.array([diff(float(x)) for x in xs])
    edges = [x_lo, *_sign_breaks(diff, xs, values), x_hi]
    body, err = _integrate_pieces(lambda x: abs(diff(x)), edges)

    # beyond the window one of the two CDFs is the reference's tail integral
    tails = _tail_mass(ref, x_lo, x_hi)
    law_tail_bound = math.exp(law.log_cdf(x_lo)) * max(x_lo - law.lower, 0.0)
    law_tail_bound += -math.expm1(law.log_cdf(x_hi)) * max(law.upper - x_hi, 0.0)
    value = body + tails
    return _report(law, Metric.W1, value, None, err + law_tail_bound, (x_lo, x_hi))


def _tail_mass(ref, x_lo: float, x_hi: float) -> float:
    loc = getattr(ref, "loc", None)
    if loc is None:
        return 0.0
    return gumbel_lower_integral(x_lo - loc) + gumbel_upper_integral(x_hi - loc)


def w1_between_laws(law_x: ExactLaw, law_w: ExactLaw) -> DistanceReport:
    """``int (F_X - F_W) dx``; the integrand is nonnegative since ``(A_n + B_n x)^2 >= beta_n(x)``."""
    if law_x.params.n != law_w.params.n or law_x.params.p != law_w.params.p:
        raise ValueError(
            f"laws differ in (n, p): ({law_x.params.n}, {law_x.params.p}) vs ({law_w.params.n}, {law_w.params.p})"
        )
    if law_x.law != "X" or law_w.law != "W":
        raise ValueError("w1_between_laws expects an X law and a W law")
    x_lo, _ = effective_window(law_x, law_x)
    _, x_hi = effective_window(law_w, law_w)

    def diff(x: float) -> float:
        return math.exp(law_x.log_cdf(x)) - math.exp(law_w.log_cdf(x))

    body, err = _integrate_pieces(diff, [x_lo, 0.5 * (x_lo + x_hi), x_hi])
    tail_bound = math.exp(law_x.log_cdf(x_lo)) * (x_lo - min(law_x.lower, law_w.lower))
    tail_bound += -math.expm1(law_w.log_cdf(x_hi)) * (max(law_x.upper, law_w.upper) - x_hi)
    return _report(law_w, Metric.W1_XW, body, None, err + max(tail_bound, 0.0), (x_lo, x_hi))


def distance(law: ExactLaw, metric: Metric | str, workers: int = 1) -> DistanceReport:
    """Dispatch on ``metric``; ``W1_XW`` pairs ``law`` with its X/W sibling."""
    metric = Metric(metric)
    if metric is Metric.KS:
        return ks_distance(law, workers=workers)
    if metric is Metric.W1:
        return w1_distance(law)
    return w1_between_laws(law.with_law("X"), law.with_law("W"))
