"""Command-line front end: ``tcue-gumbel <command> [options]``.

Commands are thin wrappers over the library.  Exit codes: 0 success,
1 validation failure, 2 invalid arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .asymptotics import (
    LemmaId,
    check_alpha,
    check_gaussian_tail,
    check_kappa,
    check_survival,
    check_survival_bound,
    check_tail_sum,
)
from .distances import Metric, distance
from .exact_law import ExactLaw
from .sampling import (
    SamplingError,
    check_distributional_identity,
    sample_beta_max,
    sample_haar_truncation,
)
from .scaling import EnsembleParams

EXIT_OK, EXIT_FAIL, EXIT_ARGS, EXIT_NUMERIC = 0, 1, 2, 3

SWEEP_COLUMNS = (
    "n",
    "p",
    "c",
    "metric",
    "s_n",
    "ell2",
    "value",
    "leading_refined",
    "leading_headline",
    "ratio_refined",
    "ratio_headline",
    "wall_time_ms",
    "status",
)

_METRIC_FLAG = {"ks": Metric.KS, "w1": Metric.W1, "w1-xw": Metric.W1_XW}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    n_list: tuple[int, ...]
    ratio_list: tuple[float, ...]
    metrics: tuple[Metric, ...]
    law: str = "W"
    output_path: str | None = None
    threads: int = 1
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if not self.n_list:
            raise UsageError("n_list is empty")
        if not self.ratio_list:
            raise UsageError("ratio_list is empty")
        if not self.metrics:
            raise UsageError("no metrics requested")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        for n in self.n_list:
            for c in self.ratio_list:
                if not 0.0 < c < 1.0:
                    raise UsageError(f"ratio {c} outside (0, 1)")
                p = round(c * n)
                if not 1 <= p < n:
                    raise UsageError(f"ratio {c} gives p={p} outside [1, {n - 1}] for n={n}")

    def tasks(self) -> list[tuple[int, float]]:
        return [(n, c) for n in sorted(set(self.n_list)) for c in sorted(set(self.ratio_list))]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sweep_task(args) -> list[dict]:
    n, c, metrics, law_name = args
    p = round(c * n)
    law = ExactLaw.from_params(n, p, law_name)
    rows = []
    for metric in metrics:
        row = {"n": n, "p": p, "c": c, "metric": metric.value, "s_n": law.constants.s_n, "ell2": law.constants.ell2}
        start = time.perf_counter()
        try:
            rep = distance(law, metric)
            row.update(
                value=rep.value,
                leading_refined=rep.leading_refined,
                leading_headline=rep.leading_headline,
                ratio_refined=rep.ratio_refined,
                ratio_headline=rep.ratio_headline,
                status="ok" if math.isfinite(rep.value) else "error:nonfinite",
            )
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            row["status"] = f"error:{type(exc).__name__}"
        row["wall_time_ms"] = (time.perf_counter() - start) * 1e3
        rows.append(row)
    return rows


def run_sweep(config: SweepConfig) -> tuple[str, bool]:
    """Return the CSV text (with trailing checksum line) and whether every row succeeded."""
    tasks = [(n, c, config.metrics, config.law) for n, c in config.tasks()]
    if config.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    ok = True
    for rows in results:
        for row in rows:
            if not config.timing:
                row["wall_time_ms"] = None
            ok &= row["status"] == "ok"
            buf.write(",".join(_fmt(row.get(col)) for col in SWEEP_COLUMNS) + "\n")
    body = buf.getvalue()
    digest = hashlib.sha256(body.encode()).hexdigest()
    return body + f"# sha256={digest}\n", ok


# ---------------------------------------------------------------------------
# argument handling


def _resolve_p(args) -> int:
    if args.p is not None and args.ratio is not None:
        raise UsageError("give either --p or --ratio, not both")
    if args.p is not None:
        return args.p
    if args.ratio is not None:
        if not 0.0 < args.ratio < 1.0:
            raise UsageError(f"--ratio must lie in (0, 1), got {args.ratio}")
        return round(args.ratio * args.n)
    raise UsageError("one of --p or --ratio is required")


def _law(args, law_name: str | None = None) -> ExactLaw:
    return ExactLaw.from_params(args.n, _resolve_p(args), law_name or args.law)


def _emit(obj: dict, as_json: bool, out) -> None:
    if as_json:
        out.write(json.dumps(obj, sort_keys=True) + "\n")
        return
    for key, value in obj.items():
        out.write(f"{key}: {_fmt(value)}\n")


def cmd_exact_cdf(args, out) -> int:
    law = _law(args)
    records = []
    for x in args.x:
        lc = law.log_cdf(x)
        records.append(
            {
                "x": x,
                "threshold": law.threshold(x),
                "log_cdf": lc,
                "cdf": law.cdf(x),
            }
        )
    if args.json:
        out.write(json.dumps({"n": law.params.n, "p": law.params.p, "law": law.law, "points": records}, sort_keys=True) + "\n")
    else:
        for rec in records:
            _emit(rec, False, out)
    return EXIT_OK


def cmd_distance(args, out) -> int:
    law = _law(args)
    metric = _METRIC_FLAG[args.metric]
    rep = distance(law, metric, workers=args.threads)
    _emit(rep.to_dict(), args.json, out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    metrics = tuple(sorted({_METRIC_FLAG[m] for m in args.metric}, key=lambda m: m.value))
    config = SweepConfig(
        n_list=tuple(args.n),
        ratio_list=tuple(args.ratio),
        metrics=metrics,
        law=args.law,
        output_path=args.out,
        threads=args.threads,
        seed=args.seed,
        timing=args.timing,
    )
    text, ok = run_sweep(config)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_sample(args, out) -> int:
    params = EnsembleParams(args.n, _resolve_p(args))
    if args.mode == "haar":
        batch = sample_haar_truncation(params, args.samples, args.seed, workers=args.threads)
    else:
        trunc = None if args.truncation is None else (args.truncation if args.truncation == "auto" else int(args.truncation))
        batch = sample_beta_max(params, args.samples, args.seed, truncation=trunc, workers=args.threads)
    summary = dict(batch.header())
    summary["mean"] = float(batch.draws.mean())
    summary["max"] = float(batch.draws.max())
    if args.out:
        csv_path, json_path = batch.write(args.out)
        summary["csv"] = str(csv_path)
        summary["header"] = str(json_path)
    _emit(summary, args.json, out)
    return EXIT_OK


def _validate_report(args):
    lemma = LemmaId(args.lemma)
    if lemma is LemmaId.L2_2:
        return check_gaussian_tail(
            args.z or (6.0, 8.0, 10.0, 12.0),
            args.r if args.r is not None else (0.0, 1.0, 2.0, 3.0, 4.0),
        )
    if lemma is LemmaId.CRU:
        params = EnsembleParams(args.n or 24, args.p or 10)
        return check_distributional_identity(params, args.samples or 20_000, args.seed, workers=args.threads)
    defaults = {
        LemmaId.L2_3: (10**5, 5 * 10**4),
        LemmaId.L2_4: (10**4, 5 * 10**3),
        LemmaId.L2_5: (10**4, 5 * 10**3),
        LemmaId.ALPHA: (10**5, 5 * 10**4),
        LemmaId.KAPPA: (10**6, 5 * 10**5),
    }
    n = args.n or defaults[lemma][0]
    p = args.p if args.p is not None else (round(args.ratio * n) if args.ratio is not None else defaults[lemma][1])
    law = ExactLaw.from_params(n, p)
    if lemma is LemmaId.L2_3:
        if args.u:
            return check_survival(law, args.j or (0, 10, 100, 1000), args.u)
        return check_survival(law, args.j or (0, 10, 100, 1000))
    if lemma is LemmaId.L2_4:
        return check_survival_bound(law, args.j or (100, 316, 999), args.x or (1.0, 5.0))
    if lemma is LemmaId.L2_5:
        return check_tail_sum(law.constants, args.L, args.x[0] if args.x else None)
    if lemma is LemmaId.ALPHA:
        return check_alpha(law, args.x)
    return check_kappa(law, args.x)


def cmd_validate(args, out) -> int:
    report = _validate_report(args)
    if report.regime_flags and not all(report.regime_flags) and not args.force:
        bad = [g for g, ok in zip(report.grid, report.regime_flags) if not ok]
        raise UsageError(f"grid points outside the formula's regime: {bad}; rerun with --force")
    if args.json:
        out.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    else:
        out.write(f"{'point':>28} {'exact':>14} {'approx':>14} {'rel_err':>11} {'band':>10}  ok\n")
        for row in report.rows():
            ok = abs(row["relative_error"]) <= row["band"]
            flag = "" if row["in_regime"] else " (outside regime)"
            out.write(
                f"{str(row['point']):>28} {row['exact']:14.6e} {row['approx']:14.6e} "
                f"{row['relative_error']:11.3e} {row['band']:10.3e}  {'yes' if ok else 'NO'}{flag}\n"
            )
        out.write(f"{report.lemma_id.value}: {'PASS' if report.pass_ else 'FAIL'}\n")
    return EXIT_OK if report.pass_ else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcue-gumbel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def ensemble(p, required=True):
        p.add_argument("--n", type=int, required=required, help="ambient dimension")
        p.add_argument("--p", type=int, help="truncation size")
        p.add_argument("--ratio", type=float, help="p = round(ratio * n)")

    def common(p):
        p.add_argument("--json", action="store_true", help="emit JSON")
        p.add_argument("--threads", type=int, default=1, help="worker processes")

    p = sub.add_parser("exact-cdf", help="exact CDF of W_n or X_n")
    ensemble(p)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--law", choices=("W", "X"), default="W")
    common(p)
    p.set_defaults(func=cmd_exact_cdf)

    p = sub.add_parser("distance", help="KS or W1 distance to the Gumbel law")
    ensemble(p)
    p.add_argument("--metric", choices=tuple(_METRIC_FLAG), default="ks")
    p.add_argument("--law", choices=("W", "X"), default="W")
    common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("sweep", help="distances over an (n, p/n) grid as CSV")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--ratio", type=float, nargs="+", default=[0.5])
    p.add_argument("--metric", choices=tuple(_METRIC_FLAG), nargs="+", default=["ks", "w1"])
    p.add_argument("--law", choices=("W", "X"), default="W")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true", help="fill wall_time_ms (output no longer reproducible)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="Monte Carlo draws of max |z_j|^2")
    ensemble(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("beta-max", "haar"), default="beta-max")
    p.add_argument("--truncation", help="K or 'auto' (beta-max mode only)")
    p.add_argument("--out", help="CSV path; a JSON header is written alongside")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("validate", help="confront an asymptotic formula with exact values")
    p.add_argument("--lemma", required=True, choices=[m.value for m in LemmaId])
    ensemble(p, required=False)
    p.add_argument("--j", type=int, nargs="+")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--u", type=float, nargs="+", help="u values for L2_3")
    p.add_argument("--z", type=float, nargs="+")
    p.add_argument("--r", type=float, nargs="+")
    p.add_argument("--L", type=int, default=0)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=20240611)
    p.add_argument("--force", action="store_true", help="run even if points leave the regime")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_ARGS
    try:
        return args.func(args, out)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"tcue-gumbel: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (ArithmeticError, SamplingError, RuntimeError) as exc:
        print(f"tcue-gumbel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
