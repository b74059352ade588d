"""Monte Carlo draws of the largest squared eigenvalue modulus.

Two independent routes:

``beta_max``
    ``max_j Y_j`` with independent ``Y_j ~ Beta(j, n - p)``, each Beta formed
    from two Gamma variates.  ``truncated`` mode keeps only the top ``K``
    indices.
``haar_truncation``
    Complex Ginibre matrix, QR with the diagonal phase fix (which makes the
    unitary factor exactly Haar), top-left ``p x p`` block, eigenvalues by
    :func:`complex_eigenvalues`.

Randomness is counter based.  Draw ``i`` of a batch with seed ``s`` uses a
Philox generator keyed by ``s`` whose counter starts at ``i << 192``; a
resampled draw after a rejection bumps the next 64-bit word.  Draws are
therefore reproducible bit for bit whatever the worker count.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .asymptotics import LemmaCheckReport, LemmaId
from .eigen import EigenResult, complex_eigenvalues
from .exact_law import beta_ladder, beta_max_log_cdf
from .scaling import EnsembleParams, derive_constants

__all__ = [
    "SamplingMode",
    "SampleBatch",
    "SamplingError",
    "EigenResult",
    "complex_eigenvalues",
    "draw_generator",
    "truncation_error_bound",
    "choose_truncation",
    "sample_beta_max",
    "sample_haar_truncation",
    "haar_unitary",
    "ks_one_sample",
    "ks_two_sample",
    "ks_critical_one_sample",
    "ks_critical_two_sample",
    "beta_max_cdf",
    "check_distributional_identity",
    "HAAR_MAX_N",
    "TRUNCATION_TARGET",
]

HAAR_MAX_N = 512
TRUNCATION_TARGET = 1e-6
UNITARITY_TOL = 1e-10
MODULUS_SLACK = 1e-8
MAX_REJECTION_RATE = 1e-3
KS_1PCT = 1.63
_MAX_RETRIES = 16


class SamplingMode(str, enum.Enum):
    BETA_MAX = "beta_max"
    HAAR_TRUNCATION = "haar_truncation"


class SamplingError(RuntimeError):
    """Too many rejected draws, or an inadmissible sampling request."""


@dataclass(frozen=True)
class SampleBatch:
    mode: SamplingMode
    params: EnsembleParams
    seed: int
    draws: np.ndarray
    count: int
    metadata: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {
            "mode": self.mode.value,
            "n": self.params.n,
            "p": self.params.p,
            "seed": self.seed,
            "count": self.count,
            **self.metadata,
        }

    def write(self, csv_path: str | Path) -> tuple[Path, Path]:
        """Write draws (one per line, round-trip precision) and a JSON header next to them."""
        csv_path = Path(csv_path)
        json_path = csv_path.with_suffix(".json")
        with csv_path.open("w") as fh:
            fh.write("draw\n")
            for v in self.draws:
                fh.write(f"{float(v)!r}\n")
        json_path.write_text(json.dumps(self.header(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path

    @classmethod
    def read(cls, csv_path: str | Path) -> "SampleBatch":
        csv_path = Path(csv_path)
        header = json.loads(csv_path.with_suffix(".json").read_text())
        draws = np.loadtxt(csv_path, skiprows=1, ndmin=1)
        meta = {k: v for k, v in header.items() if k not in {"mode", "n", "p", "seed", "count"}}
        return cls(
            SamplingMode(header["mode"]),
            EnsembleParams(header["n"], header["p"]),
            int(header["seed"]),
            draws,
            int(header["count"]),
            meta,
        )


def draw_generator(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Independent Philox substream for draw ``index`` (and retry ``attempt``)."""
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed, counter=(index << 192) | (attempt << 128)))


def _run_chunks(fn, seed: int, count: int, workers: int, extra) -> list:
    indices = np.arange(count)
    if workers <= 1 or count < 2 * workers:
        return [fn((seed, indices, extra))]
    chunks = np.array_split(indices, 8 * workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [(seed, c, extra) for c in chunks]))


# ---------------------------------------------------------------------------
# Beta-max route


def truncation_error_bound(params: EnsembleParams, K: int, t_grid: np.ndarray | None = None) -> tuple[float, float]:
    """Bound on ``P(max over the top K indices != max over all p)``.

    For any threshold ``t`` the two maxima can differ only if the kept
    maximum is below ``t`` or some dropped ``Y_a`` exceeds ``t``, so

        delta(K) <= min_t [ prod_{a > p-K} I_t(a, m) + sum_{a <= p-K} P(Y_a > t) ].

    Returns ``(delta, t_star)``.
    """
    p, m = params.p, params.m
    if not 1 <= K <= p:
        raise ValueError(f"K must lie in [1, {p}], got {K}")
    if K == p:
        return 0.0, math.nan
    best, best_t = math.inf, math.nan
    for t in _threshold_grid(params) if t_grid is None else t_grid:
        lad = beta_ladder(float(t), p, m)
        cut = p - K  # indices a = 1..cut are dropped
        drop = float(np.sum(lad.survival[: max(cut - lad.start + 1, 0)]))
        kept = math.exp(float(np.sum(lad.log_cdf_terms[max(cut + 1 - lad.start, 0) :])))
        if kept + drop < best:
            best, best_t = kept + drop, float(t)
    return best, best_t


def _threshold_grid(params: EnsembleParams, points: int = 96) -> np.ndarray:
    # thresholds spanning the upper bulk of the maximum, from W-scale x in [-4, 40]
    c = derive_constants(params)
    x = np.linspace(-4.0, 40.0, points)
    t = params.ratio * (1.0 + (c.a_n + c.b_n * x) / c.sqrt_s_n)
    return np.unique(np.clip(t, 1e-12, 1.0 - 1e-12))


def choose_truncation(params: EnsembleParams, target: float = TRUNCATION_TARGET) -> tuple[int, float, float]:
    """Smallest ``K < p`` with :func:`truncation_error_bound` at most ``target``.

    Returns ``(K, delta, exponential_bound)`` where the last entry is the
    exponential survival bound ``sqrt(n) sum_{j >= K} exp(-(j/sqrt(s_n))(a_n + b_n x))``
    at the optimal threshold, reported for comparison only.
    """
    p, m = params.p, params.m
    if p < 2:
        raise SamplingError("truncated sampling needs p >= 2")
    best_K, best_delta, best_t = None, math.inf, math.nan
    for t in _threshold_grid(params):
        lad = beta_ladder(float(t), p, m)
        # kept(K) = exp(sum of the top K log-CDF terms); dropped(K) = sum of the rest
        surv_cum = np.concatenate(([0.0], np.cumsum(lad.survival)))
        top_log = np.concatenate(([0.0], np.cumsum(lad.log_cdf_terms[::-1])))
        K = np.arange(1, p)
        n_drop = np.clip(p - K - lad.start + 1, 0, None)
        total = np.exp(top_log[np.minimum(K, lad.survival.size)]) + surv_cum[n_drop]
        ok = np.flatnonzero(total <= target)
        if ok.size and (best_K is None or K[ok[0]] < best_K):
            best_K, best_delta, best_t = int(K[ok[0]]), float(total[ok[0]]), float(t)
    if best_K is None:
        raise SamplingError(f"no K < p reaches truncation error {target:g}; use exact mode")
    c = derive_constants(params)
    x_star = ((best_t * params.n / p - 1.0) * c.sqrt_s_n - c.a_n) / c.b_n
    rate = (c.a_n + c.b_n * x_star) / c.sqrt_s_n
    exp_bound = math.sqrt(params.n) * math.exp(-best_K * rate) / -math.expm1(-rate) if rate > 0 else math.inf
    return best_K, best_delta, exp_bound


def _beta_max_chunk(args):
    seed, indices, (p, m, lo) = args
    shapes = np.arange(lo, p + 1, dtype=float)
    out = np.empty(indices.size)
    for k, i in enumerate(indices):
        rng = draw_generator(seed, int(i))
        g1 = rng.standard_gamma(shapes)
        g2 = rng.standard_gamma(float(m), size=shapes.size)
        out[k] = np.max(g1 / (g1 + g2))
    return out


def sample_beta_max(
    params: EnsembleParams,
    count: int,
    seed: int,
    truncation: int | str | None = None,
    workers: int = 1,
) -> SampleBatch:
    """Draw ``count`` realizations of ``max_{1<=j<=p} Beta(j, n-p)``.

    ``truncation=None`` samples every index.  An integer ``K`` keeps only
    ``j = p-K+1..p``; ``"auto"`` picks the smallest ``K`` whose truncation
    error bound is below ``1e-6`` per draw.  The chosen ``K`` and its bound
    are stored in ``metadata``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    p, m = params.p, params.m
    meta: dict = {"truncation": "exact"}
    lo = 1
    if truncation is not None:
        if truncation == "auto":
            K, delta, exp_bound = choose_truncation(params)
            meta.update(truncation="auto", K=K, error_bound=delta, exponential_bound=exp_bound)
        else:
            K = int(truncation)
            if not 1 <= K < p:
                raise ValueError(f"truncation K must satisfy 1 <= K < p={p}, got {K}")
            delta, _ = truncation_error_bound(params, K)
            meta.update(truncation="fixed", K=K, error_bound=delta)
        lo = p - K + 1
    parts = _run_chunks(_beta_max_chunk, seed, count, workers, (p, m, lo))
    draws = np.concatenate(parts)
    return SampleBatch(SamplingMode.BETA_MAX, params, int(seed), draws, int(count), meta)


# ---------------------------------------------------------------------------
# Haar route


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary from a phase-corrected QR of a Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    phase = d / np.abs(d)
    return q * phase  # column k scaled by the phase of r_kk


def _haar_draw(n: int, p: int, rng) -> tuple[float | None, str | None]:
    u = haar_unitary(n, rng)
    defect = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    if defect > UNITARITY_TOL:
        return None, "unitarity"
    res = complex_eigenvalues(u[:p, :p])
    if not res.converged:
        return None, "eigen"
    sq = np.abs(res.eigenvalues) ** 2
    top = float(np.max(sq))
    if top > (1.0 + MODULUS_SLACK) ** 2:
        return None, "modulus"
    return min(top, 1.0), None


def _haar_chunk(args):
    seed, indices, (n, p) = args
    out = np.empty(indices.size)
    rejected = {"unitarity": 0, "eigen": 0, "modulus": 0}
    for k, i in enumerate(indices):
        for attempt in range(_MAX_RETRIES):
            value, why = _haar_draw(n, p, draw_generator(seed, int(i), attempt))
            if why is None:
                out[k] = value
                break
            rejected[why] += 1
        else:
            raise SamplingError(f"draw {int(i)} rejected {_MAX_RETRIES} times")
    return out, rejected


def sample_haar_truncation(params: EnsembleParams, count: int, seed: int, workers: int = 1) -> SampleBatch:
    """Draw ``count`` values of ``max_j |z_j|^2`` for truncated Haar unitaries.

    A draw is rejected (and regenerated from the next substream) when the
    unitary factor deviates from unitarity by more than ``1e-10``, when the
    eigensolver fails to converge, or when an eigenvalue leaves the unit disk
    by more than ``1e-8``.  More than 0.1 % rejections fails the batch.
    """
    n, p = params.n, params.p
    if n > HAAR_MAX_N:
        raise ValueError(f"Haar sampling is limited to n <= {HAAR_MAX_N}, got n={n}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    parts = _run_chunks(_haar_chunk, seed, count, workers, (n, p))
    draws = np.concatenate([d for d, _ in parts])
    rejected = {"unitarity": 0, "eigen": 0, "modulus": 0}
    for _, r in parts:
        for key, v in r.items():
            rejected[key] += v
    total = sum(rejected.values())
    if total > MAX_REJECTION_RATE * count:
        raise SamplingError(f"{total} of {count} draws rejected ({rejected})")
    meta = {"rejections": total, "rejections_by_cause": rejected}
    return SampleBatch(SamplingMode.HAAR_TRUNCATION, params, int(seed), draws, int(count), meta)


# ---------------------------------------------------------------------------
# KS statistics


def ks_one_sample(draws, cdf) -> float:
    """``sup_x |F_N(x) - F(x)|`` for a continuous ``cdf`` (vectorized callable)."""
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise ValueError("empty sample")
    return float(stats.ks_1samp(draws, cdf, method="asymp").statistic)


def ks_two_sample(draws_a, draws_b) -> float:
    """``sup_x |F_A(x) - F_B(x)|`` between two empirical CDFs."""
    a = np.asarray(draws_a, dtype=float)
    b = np.asarray(draws_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    return float(stats.ks_2samp(a, b, method="asymp").statistic)


def ks_critical_one_sample(count: int) -> float:
    """Asymptotic 1 % critical value ``1.63 / sqrt(N)``."""
    return KS_1PCT / math.sqrt(count)


def ks_critical_two_sample(count_a: int, count_b: int | None = None) -> float:
    """Asymptotic 1 % critical value ``1.63 sqrt(1/N_a + 1/N_b)``."""
    count_b = count_a if count_b is None else count_b
    return KS_1PCT * math.sqrt(1.0 / count_a + 1.0 / count_b)


def beta_max_cdf(params: EnsembleParams):
    """Vectorized exact CDF of ``max_j Y_j`` as a function of the threshold ``t``."""
    p, m = params.p, params.m

    def cdf(t):
        ts = np.asarray(t, dtype=float)
        out = np.array([math.exp(beta_max_log_cdf(float(v), p, m)) for v in ts.ravel()])
        return out.reshape(ts.shape) if ts.ndim else float(out[0])

    return cdf


def check_distributional_identity(
    params: EnsembleParams | None = None,
    count: int = 20_000,
    seed: int = 20240611,
    workers: int = 1,
) -> LemmaCheckReport:
    """One-sample KS of Haar-truncation draws against the exact Beta-max CDF at the 1 % level."""
    params = EnsembleParams(24, 10) if params is None else params
    batch = sample_haar_truncation(params, count, seed, workers)
    stat = ks_one_sample(batch.draws, beta_max_cdf(params))
    crit = ks_critical_one_sample(count)
    return LemmaCheckReport(
        LemmaId.CRU,
        [(params.n, params.p, count, seed)],
        [crit],
        [stat],
        [stat],
        [crit],
        [True],
    )
