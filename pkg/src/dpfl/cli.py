"""Command-line interface.

Every subcommand writes JSON (default) or CSV to stdout. Errors produce a
single line on stderr and exit code 2 (usage), 3 (bad data) or 4 (violated
parameter constraint).
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import bounds, families
from .core import Dataset, change_one_distance, format_float, read_dataset
from .errors import ConstraintError, DataError, DPFLError, InvalidParams, UnknownMetric
from .mechanism import (
    MechanismSpec,
    build_output_density,
    exact_tail,
    fair_quantile,
    metric_many,
    sample_locations,
)
from .metrics import crossed_set, fair, optimal_location, social_welfare, swdiff
from .score import p_alpha_value, q_value

EXIT_USAGE, EXIT_DATA, EXIT_CONSTRAINT = 2, 3, 4

CSV_COLUMNS = ("cell_id", "n", "m", "epsilon", "alpha", "beta", "lambda", "metric", "threshold",
               "exact", "mc_estimate", "mc_stderr", "bound")

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class UsageError(DPFLError):
    pass


# ---------------------------------------------------------------------------
# serialisation


def _render(value: Any) -> str:
    """JSON text with floats at 17 significant digits."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return format_float(v) if math.isfinite(v) else "null"
    if isinstance(value, str):
        import json

        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{_render(str(k))}: {_render(v)}" for k, v in value.items()) + "}"
    if isinstance(value, Dataset):
        return value.to_json()
    if isinstance(value, families.SinglePeakedDensity):
        return value.to_json()
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return format_float(v) if math.isfinite(v) else ""
    return str(value)


def to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(obj: Any, fmt: str, rows: Sequence[dict] | None = None, columns=None) -> str:
    """Serialise a result. ``rows`` is the tabular view used for CSV output."""
    if fmt == "csv":
        if rows is None:
            rows = [obj] if isinstance(obj, dict) else obj
        return to_csv(rows, columns)
    return _render(obj) + "\n"


# ---------------------------------------------------------------------------
# argument helpers


def _alpha_arg(text: str) -> str | float:
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _seed_arg(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= _MASK64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def resolve_alpha(alpha: str | float, n: int, epsilon: float) -> float:
    """The one place where 'auto' becomes 1/(n*epsilon)."""
    if alpha == "auto":
        if not epsilon > 0:
            raise InvalidParams("--alpha auto needs a positive --epsilon")
        return min(1.0, 1.0 / (n * epsilon))
    return float(alpha)


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("DPFL_SEED")
    if env is None:
        return 0
    try:
        return _seed_arg(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"DPFL_SEED: {exc}") from None


def cell_seed(seed: int, cell_id: int) -> int:
    return (seed + (cell_id + 1) * _GOLDEN) & _MASK64


def _spec(d: Dataset, epsilon: float, alpha) -> MechanismSpec:
    return MechanismSpec(epsilon, resolve_alpha(alpha, d.n, epsilon))


# ---------------------------------------------------------------------------
# Monte Carlo


def _chunks(trials: int) -> list[tuple[int, int]]:
    # the chunking depends only on the trial count, never on the worker count
    size = max(1, min(4096, trials))
    return [(a, min(trials, a + size)) for a in range(0, trials, size)]


def mc_values(d: Dataset, spec: MechanismSpec, metric: str, trials: int, seed: int,
              workers: int = 1, density=None) -> np.ndarray:
    """Metric value at each of ``trials`` mechanism outputs, ordered by trial index."""
    dens = density if density is not None else build_output_density(d, spec)

    def run(span):
        ells = sample_locations(dens, seed, np.arange(span[0], span[1], dtype=np.uint64))
        return metric_many(d, spec, metric, ells)

    spans = _chunks(trials)
    if not spans:
        return np.empty(0)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    return np.concatenate(parts)


def mc_tail(values: np.ndarray, threshold: float) -> tuple[float | None, float | None]:
    t = values.size
    if t == 0:
        return None, None
    hits = int(np.count_nonzero(values > threshold))
    est = hits / t
    return est, math.sqrt(est * (1.0 - est) / t)


# ---------------------------------------------------------------------------
# experiment sweep


@dataclass
class ExperimentConfig:
    dataset_kind: str = "uniform"
    dataset: Dataset | None = None
    n: Sequence[int] = (101,)
    m: float = 2.0
    epsilon: Sequence[float] = (1.0,)
    alpha: Sequence[str | float] = ("auto",)
    beta: float | None = None
    lam: Sequence[float | None] = (None,)
    metric: str = "p"
    threshold: Sequence[float] = (0.0,)
    trials: int = 0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 0:
            raise UsageError("--trials must be >= 0")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if self.metric not in ("p", "fair", "swdiff", "fair-quantile"):
            raise UnknownMetric(f"unknown metric {self.metric!r}")
        if self.metric == "fair-quantile" and self.beta is None:
            raise InvalidParams("metric fair-quantile needs --beta")


@dataclass
class ExperimentRecord:
    cell_id: int
    n: int
    m: float
    epsilon: float
    alpha: float
    beta: float | None
    lam: float | None
    metric: str
    threshold: float | None
    exact: float | None
    mc_estimate: float | None
    mc_stderr: float | None
    bound: float | None
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "cell_id": self.cell_id, "n": self.n, "m": self.m, "epsilon": self.epsilon,
            "alpha": self.alpha, "beta": self.beta, "lambda": self.lam, "metric": self.metric,
            "threshold": self.threshold, "exact": self.exact, "mc_estimate": self.mc_estimate,
            "mc_stderr": self.mc_stderr, "bound": self.bound,
        }


def _experiment_dataset(cfg: ExperimentConfig, n: int, k: int | None, lam: float | None) -> Dataset:
    kind = cfg.dataset_kind.replace("-", "_")
    if kind == "file":
        return cfg.dataset
    if kind == "uniform":
        return families.uniform_dataset(n, cfg.m)
    if kind == "ctm_worst":
        return families.ctm_worst(n, k, cfg.m)
    if kind == "spm_worst":
        if lam is None:
            raise InvalidParams("spm-worst datasets need --lambda")
        return families.spm_worst(n, k, cfg.m, lam)
    raise UsageError(f"unknown dataset kind {cfg.dataset_kind!r}")


def _bound_for(cfg: ExperimentConfig, n: int, eps: float, alpha: float, k: int, lam) -> float | None:
    if cfg.metric != "p" or alpha <= 0 or not 0 <= k < n // 2:
        return None
    kind = cfg.dataset_kind.replace("-", "_")
    if kind == "spm_worst" and lam:
        return bounds.p_tail_upper(n, eps, alpha, k, "spm", lam)
    if kind in ("ctm_worst", "uniform"):
        return bounds.p_tail_upper(n, eps, alpha, k, "ctm")
    return None


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Sweep the parameter grid; one record per cell, in grid order."""
    records = []
    ns = [cfg.dataset.n] if cfg.dataset_kind == "file" else list(cfg.n)
    thresholds = [None] if cfg.metric == "fair-quantile" else list(cfg.threshold)
    grid = itertools.product(ns, cfg.epsilon, cfg.alpha, cfg.lam, thresholds)
    for cell_id, (n, eps, alpha_in, lam, thr) in enumerate(grid):
        alpha = resolve_alpha(alpha_in, n, eps)
        k = int(thr) if (cfg.metric == "p" and thr is not None) else 0
        if cfg.metric == "p" and thr is not None and k != thr:
            raise InvalidParams("thresholds for metric p must be integers")
        d = _experiment_dataset(cfg, n, k, lam)
        spec = MechanismSpec(eps, alpha)
        dens = build_output_density(d, spec)
        seed = cell_seed(cfg.seed, cell_id)
        mc_est = mc_err = bound = None
        if cfg.metric == "fair-quantile":
            exact = fair_quantile(d, spec, cfg.beta, density=dens)
            if cfg.trials:
                vals = mc_values(d, spec, "fair", cfg.trials, seed, cfg.workers, dens)
                mc_est = float(np.quantile(vals, 1.0 - cfg.beta))
        else:
            exact = exact_tail(d, spec, cfg.metric, thr, density=dens)
            if cfg.trials:
                vals = mc_values(d, spec, cfg.metric, cfg.trials, seed, cfg.workers, dens)
                mc_est, mc_err = mc_tail(vals, thr)
            bound = _bound_for(cfg, n, eps, alpha, k, lam)
        records.append(ExperimentRecord(cell_id, d.n, d.m, eps, alpha, cfg.beta, lam, cfg.metric,
                                        thr, exact, mc_est, mc_err, bound))
    return records


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    kind = args.kind.replace("-", "_")
    params: dict[str, Any] = {}
    need = {
        "ctm_worst": ("n", "k", "m"),
        "spm_worst": ("n", "k", "m", "lam"),
        "impossibility_pair": ("n", "m"),
        "fair_lb_pair": ("n", "m", "gamma"),
        "spm_lb_pair": ("n", "m", "lam"),
        "uniform": ("n", "m"),
    }
    if kind not in need:
        raise UsageError(f"unknown generator kind {args.kind!r}")
    for name in need[kind]:
        v = getattr(args, name)
        if v is None:
            flag = "--lambda" if name == "lam" else f"--{name}"
            raise UsageError(f"generator {args.kind} needs {flag}")
        params[name] = v
    if kind == "uniform":
        out = families.uniform_dataset(params["n"], params["m"])
    else:
        out = families.gen_adversarial(kind, **params)
    if isinstance(out, tuple):
        a, b = out
        obj = {"a": a, "b": b, "d_co": change_one_distance(a, b),
               "median_a": a.median, "median_b": b.median}
        rows = [{"dataset": tag, "index": i, "location": x}
                for tag, ds in (("a", a), ("b", b)) for i, x in enumerate(ds.locations, 1)]
    else:
        obj = out
        rows = [{"index": i, "location": x} for i, x in enumerate(out.locations, 1)]
    return emit(obj, args.format, rows)


def cmd_metrics(args):
    d = read_dataset(args.dataset)
    ell = d.domain.check(args.location)
    obj = {
        "n": d.n,
        "m": d.m,
        "median": optimal_location(d),
        "location": ell,
        "fair": fair(d, ell),
        "swdiff": swdiff(d, ell),
        "social_welfare": social_welfare(d, ell),
        "crossed": sorted(crossed_set(d, ell)),
        "q": q_value(d, ell),
    }
    if args.alpha is not None:
        eps = args.epsilon if args.epsilon is not None else float("nan")
        alpha = resolve_alpha(args.alpha, d.n, eps)
        obj["alpha"] = alpha
        obj["p_alpha"] = p_alpha_value(d, ell, alpha)
    rows = [{k: v for k, v in obj.items() if k != "crossed"} | {"crossed": " ".join(map(str, obj["crossed"]))}]
    return emit(obj, args.format, rows)


def cmd_sample(args):
    d = read_dataset(args.dataset)
    spec = _spec(d, args.epsilon, args.alpha)
    seed = resolve_seed(args.seed)
    dens = build_output_density(d, spec)
    ells = sample_locations(dens, seed, np.arange(args.trials, dtype=np.uint64))
    obj = {"seed": seed, "epsilon": spec.epsilon, "alpha": spec.alpha.alpha, "samples": ells.tolist()}
    rows = [{"trial_index": i, "location": float(x)} for i, x in enumerate(ells)]
    return emit(obj, args.format, rows)


def cmd_tail(args):
    d = read_dataset(args.dataset)
    spec = _spec(d, args.epsilon, args.alpha)
    dens = build_output_density(d, spec)
    exact = exact_tail(d, spec, args.metric, args.threshold, density=dens)
    obj = {"metric": args.metric, "threshold": args.threshold, "epsilon": spec.epsilon,
           "alpha": spec.alpha.alpha, "exact": exact}
    if args.trials:
        seed = resolve_seed(args.seed)
        vals = mc_values(d, spec, args.metric, args.trials, seed, args.workers, dens)
        est, err = mc_tail(vals, args.threshold)
        obj.update({"trials": args.trials, "seed": seed, "mc_estimate": est, "mc_stderr": err})
    return emit(obj, args.format)


def cmd_quantile(args):
    d = read_dataset(args.dataset)
    spec = _spec(d, args.epsilon, args.alpha)
    q = fair_quantile(d, spec, args.beta)
    obj = {"metric": "fair", "beta": args.beta, "epsilon": spec.epsilon, "alpha": spec.alpha.alpha,
           "quantile": q}
    return emit(obj, args.format)


def cmd_bound(args):
    kind = args.kind.replace("-", "_")

    def need(*names):
        for name in names:
            if getattr(args, name) is None:
                flag = "--lambda" if name == "lam" else f"--{name}"
                raise UsageError(f"bound {args.kind} needs {flag}")

    if kind in ("p_tail", "k_star"):
        need("n", "epsilon", "alpha")
        alpha = resolve_alpha(args.alpha, args.n, args.epsilon)
        if kind == "p_tail":
            need("k")
            rep = bounds.p_tail_report(args.n, args.epsilon, alpha, args.k, args.family, args.lam)
        else:
            need("beta")
            rep = bounds.k_star_report(args.n, args.epsilon, alpha, args.beta, args.family, args.lam)
        obj = rep.to_dict()
    elif kind == "direct":
        need("d_co", "epsilon")
        obj = {"kind": "direct_lower_bound", "d_co": args.d_co, "epsilon": args.epsilon,
               "value": bounds.direct_lower_bound(args.d_co, args.epsilon)}
    elif kind == "impossibility":
        need("epsilon")
        obj = {"kind": "impossibility_floor", "epsilon": args.epsilon,
               "value": bounds.impossibility_floor(args.epsilon)}
    elif kind == "dkw":
        need("n", "lam")
        obj = {"kind": "dkw_bound", "n": args.n, "lambda": args.lam,
               "value": families.dkw_bound(args.n, args.lam)}
    else:
        raise UsageError(f"unknown bound kind {args.kind!r}")
    return emit(obj, args.format)


def cmd_audit(args):
    a, b = read_dataset(args.a), read_dataset(args.b)
    spec = _spec(a, args.epsilon, args.alpha)
    ratio = bounds.audit_dp(a, b, spec)
    dist = change_one_distance(a, b)
    budget = dist * spec.epsilon
    obj = {"max_log_ratio": ratio, "budget": budget, "d_co": dist, "epsilon": spec.epsilon,
           "alpha": spec.alpha.alpha, "within_budget": ratio <= budget + 1e-9}
    return emit(obj, args.format)


def cmd_check_family(args):
    d = read_dataset(args.dataset)
    obj: dict[str, Any] = {"n": d.n, "m": d.m, "ctm": families.is_ctm(d)}
    if args.certificate is not None:
        cert = families.read_certificate(args.certificate)
        obj["ks_distance"] = families.ks_distance(d, cert)
        if args.lam is not None:
            obj["lambda"] = args.lam
            obj["spm_certified"] = families.verify_spm_certificate(d, cert, args.lam)
    return emit(obj, args.format)


def cmd_certificate(args):
    d = read_dataset(args.dataset)
    cert = families.ctm_certificate(d)
    if args.format == "csv":
        rows = [{"left": lo, "right": hi, "density": f}
                for lo, hi, f in zip(cert.breakpoints[:-1], cert.breakpoints[1:], cert.densities)]
        return emit(None, "csv", rows, ("left", "right", "density"))
    return cert.to_json() + "\n"


def cmd_experiment(args):
    if args.dataset is not None:
        kind, ds = "file", read_dataset(args.dataset)
    else:
        kind, ds = args.dataset_kind, None
    cfg = ExperimentConfig(
        dataset_kind=kind,
        dataset=ds,
        n=args.n or [101],
        m=args.m if args.m is not None else 2.0,
        epsilon=args.epsilon or [1.0],
        alpha=args.alpha or ["auto"],
        beta=args.beta,
        lam=args.lam or [None],
        metric=args.metric,
        threshold=args.threshold or [0.0],
        trials=args.trials,
        seed=resolve_seed(args.seed),
        workers=args.workers,
    )
    rows = [r.row() for r in run_experiment(cfg)]
    if args.format == "csv":
        return to_csv(rows, CSV_COLUMNS)
    return _render(rows) + "\n"


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpfl", description="Private facility location on a line.", allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text, allow_abbrev=False)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.set_defaults(func=func)
        return sp

    def mech(sp, alpha_default=None):
        sp.add_argument("--epsilon", type=float, required=True)
        sp.add_argument("--alpha", type=_alpha_arg, required=alpha_default is None, default=alpha_default)

    sp = add("gen", cmd_gen, "generate a worst-case or adversarial dataset")
    sp.add_argument("--kind", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--m", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--gamma", type=float)

    sp = add("metrics", cmd_metrics, "loss metrics at one location")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--location", type=float, required=True)
    sp.add_argument("--alpha", type=_alpha_arg)
    sp.add_argument("--epsilon", type=float)

    sp = add("sample", cmd_sample, "draw mechanism outputs")
    sp.add_argument("--dataset", required=True)
    mech(sp)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=_seed_arg)

    sp = add("tail", cmd_tail, "exact (and optionally Monte Carlo) tail probability")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--metric", choices=("p", "fair", "swdiff"), required=True)
    sp.add_argument("--threshold", type=float, required=True)
    mech(sp)
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--seed", type=_seed_arg)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("quantile", cmd_quantile, "exact upper quantile of FAIR")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--beta", type=float, required=True)
    mech(sp)

    sp = add("bound", cmd_bound, "evaluate an analytic bound")
    sp.add_argument("--kind", required=True,
                    help="p-tail, k-star, direct, impossibility or dkw")
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--alpha", type=_alpha_arg)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--family", choices=("ctm", "spm"), default="ctm")
    sp.add_argument("--d-co", dest="d_co", type=int)

    sp = add("audit-dp", cmd_audit, "exact privacy-loss audit of two datasets")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    mech(sp)

    sp = add("check-family", cmd_check_family, "family membership and certificate checks")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--certificate")
    sp.add_argument("--lambda", dest="lam", type=float)

    sp = add("certificate", cmd_certificate, "single-peaked certificate for a CTM dataset")
    sp.add_argument("--dataset", required=True)

    sp = add("experiment", cmd_experiment, "sweep a parameter grid")
    sp.set_defaults(format="csv")
    sp.add_argument("--dataset")
    sp.add_argument("--dataset-kind", default="uniform",
                    help="uniform, ctm-worst or spm-worst (ignored with --dataset)")
    sp.add_argument("--n", type=int, nargs="+")
    sp.add_argument("--m", type=float)
    sp.add_argument("--epsilon", type=float, nargs="+")
    sp.add_argument("--alpha", type=_alpha_arg, nargs="+")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--lambda", dest="lam", type=float, nargs="+")
    sp.add_argument("--metric", choices=("p", "fair", "swdiff", "fair-quantile"), default="p")
    sp.add_argument("--threshold", type=float, nargs="+")
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--seed", type=_seed_arg)
    sp.add_argument("--workers", type=int, default=1)
    return p


def run_command(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "trials", 0) is not None and getattr(args, "trials", 0) < 0:
            raise UsageError("--trials must be >= 0")
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        out = args.func(args)
    except (UsageError, UnknownMetric) as exc:
        print(f"dpfl: usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"dpfl: data error: {exc}", file=stderr)
        return EXIT_DATA
    except ConstraintError as exc:
        print(f"dpfl: constraint error: {exc}", file=stderr)
        return EXIT_CONSTRAINT
    stdout.write(out)
    return 0


def main(argv: Iterable[str] | None = None) -> None:
    sys.exit(run_command(None if argv is None else list(argv)))
