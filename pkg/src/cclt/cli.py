"""Command-line experiment runner.

Every run writes its results (CSV or JSON) plus ``manifest.txt`` into ``--out``.
Result bodies depend only on the configuration and seed; the wall time and
timestamp live in the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, empirics, oracle
from .bounds import bound_from_summary, bound_t16_llt, llt_ratio_bound
from .core import build_model, registered_models, to_json
from .moments import estimate_residual_summary
from .transform import assumption_check

SUBCOMMANDS = ("verify-assumptions", "oracle-check", "distance", "rate", "bound", "llt", "decompose")

CSV_HELP = (
    "CSV columns. distance/rate: model,n,k,samples,distance,stderr,bound_total,seed. "
    "Other subcommands write one row per lattice point or pattern, always ending with samples,seed."
)

DEFAULTS = {
    "model": "pattern01", "n": 64, "p": 0.5, "k": 0, "seed": 0, "samples": 20000, "theorem": "t23",
    "out": ".", "format": None, "workers": 1, "ns": None, "H": "k4",
}
INT_KEYS = {"n", "k", "seed", "samples", "workers"}
FLOAT_KEYS = {"p"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def read_config(path) -> dict:
    """Flat ``key=value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            v = int(value)
        elif key in FLOAT_KEYS:
            v = float(value)
        elif key == "ns":
            v = [int(s) for s in str(value).split(",") if s.strip()] if isinstance(value, str) else list(value)
        else:
            v = value
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {value!r}") from exc
    if key == "seed" and not 0 <= v < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if key in ("samples", "workers", "n") and v <= 0:
        raise ConfigError(f"{key} must be positive")
    if key == "p" and not 0 < v < 1:
        raise ConfigError("p must lie in (0, 1)")
    if key == "format" and v not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return v


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    if cfg["model"] not in registered_models():
        raise ConfigError(f"unknown model {cfg['model']!r}; choose from {', '.join(registered_models())}")
    return cfg


def _model(cfg, n=None):
    return build_model(cfg["model"], n=n or cfg["n"], p=cfg["p"], H=cfg["H"])


# ---------------------------------------------------------------------------
# subcommands; each returns (rows or payload, default format, extra summary)


def run_verify(cfg):
    if cfg["n"] > 12:
        raise ConfigError("verify-assumptions enumerates every state: n must be at most 12")
    rows = assumption_check(_model(cfg))
    for r in rows:
        r.update(samples=0, seed=cfg["seed"])
    summary = {"drift_ok": all(r["drift_ok"] for r in rows), "r0_ok": all(r["r0_ok"] for r in rows)}
    return rows, "csv", summary


def _exact_p(p: float):
    return Fraction(p).limit_denominator(1000)


def run_oracle(cfg):
    name, n = cfg["model"], cfg["n"]
    rows = []
    if name in ("pattern01", "evenodd11"):
        law = oracle.enumerate_binary(n, _exact_p(cfg["p"]), name, cfg["workers"])
        pmf = law.count_pmf()
        for m in range(n + 1):
            if pmf[m] == 0:
                continue
            mean, var = law.conditional_moments(m)
            row = {"m": m, "E_given_m": float(mean), "Var_given_m": float(var)}
            if name == "pattern01":
                ref_mean = Fraction(m * (n - m), n - 1)
                ref_var = Fraction(math.comb(m, 2) * math.comb(n - m, 2), (n - 1) * math.comb(n - 1, 2))
                row.update(reference_mean=float(ref_mean), mean_abs_error=float(abs(mean - ref_mean)),
                           reference_var=float(ref_var), var_abs_error=float(abs(var - ref_var)))
            rows.append(row)
    elif name in ("wedge-edge", "triangle-wedge", "general-subgraph"):
        law = oracle.enumerate_graphs(n, _exact_p(cfg["p"]), cfg["workers"])
        for m in range(law.N + 1):
            mean = law.conditional(m, "U")
            ref = Fraction(2 * m * (m - 1), n + 1)
            rows.append({"m": m, "E_U_given_m": float(mean), "reference": float(ref),
                         "abs_error": float(abs(mean - ref)), "E_T_given_m": float(law.conditional(m, "T"))})
    elif name == "urn":
        model = _model(cfg)
        law = oracle.enumerate_urn(n, model.p1, model.p2)
        for key in sorted(law, key=float):
            entry = law[key]
            rows.append({"y": float(key), "prob": entry["prob"], "E_W_given_y": entry["mean"],
                         "Var_W_given_y": entry["var"]})
    else:
        raise ConfigError(f"oracle-check has no enumerator for {name}")
    for r in rows:
        r.update(samples=0, seed=cfg["seed"])
    errs = [r.get("abs_error", r.get("mean_abs_error", 0.0)) for r in rows]
    return rows, "csv", {"max_abs_error": max(errs) if errs else 0.0}


def _bound_total(model, cfg, samples):
    summary = estimate_residual_summary(model, cfg["k"], samples, cfg["seed"], workers=cfg["workers"])
    return bound_from_summary(cfg["theorem"], summary).total


def run_distance(cfg):
    model = _model(cfg)
    total = _bound_total(model, cfg, cfg["samples"]) if model.d == 1 else None
    row = empirics.distance_row(model, cfg["k"], cfg["samples"], cfg["seed"], cfg["workers"], total)
    return [row], "csv", {}


def run_rate(cfg):
    ns = cfg["ns"] or [64, 128, 256, 512, 1024]
    rows = [empirics.distance_row(_model(cfg, n), cfg["k"], cfg["samples"], cfg["seed"], cfg["workers"])
            for n in ns]
    fit = empirics.rate_regression([(r["n"], r["distance"]) for r in rows]) if len(rows) >= 4 else {}
    return rows, "csv", fit


def run_bound(cfg):
    model = _model(cfg)
    summary = estimate_residual_summary(model, cfg["k"], cfg["samples"], cfg["seed"], workers=cfg["workers"])
    report = bound_from_summary(cfg["theorem"], summary)
    payload = report.to_dict()
    payload.update(model=model.name, n=model.n, k=cfg["k"], samples=summary.samples, seed=cfg["seed"],
                   summary=summary.to_dict())
    return payload, "json", {"total": report.total}


def run_llt(cfg):
    model = _model(cfg)
    values, probs = model.y_pmf()
    res = empirics.llt_check(model)
    sigma = res["sigma"]
    k = model.lattice.point(cfg["k"])
    ratio = empirics.exact_ratio(values, probs, k)
    row = {
        "model": model.name, "n": model.n, "k": cfg["k"], "eps_Y": res["eps_Y"], "sigma_Y": sigma,
        "exact_ratio": ratio, "abs_one_minus_ratio": abs(1 - ratio),
        "envelope": llt_ratio_bound(res["eps_Y"], k, sigma),
        "envelope_unit_floor": llt_ratio_bound(res["eps_Y"], k, sigma, unit_floor=True),
    }
    if model.name in ("pattern01", "toy") and model.has_sufficient_sampler:
        # binomial Glauber chain for Y alone: R1 = 0, R2 = p |Y|
        p = model.p
        y = values - float(probs @ values)
        report = bound_t16_llt(sigma, 0.0, p * float(probs @ np.abs(y)), p * float(probs @ y**2),
                               p * float(np.max(np.abs(y) * probs)), float(probs.max()))
        row["t16_total"] = report.total
    row.update(samples=0, seed=cfg["seed"])
    return [row], "csv", {}


def run_decompose(cfg):
    if cfg["n"] > 7:
        raise ConfigError("decompose enumerates every graph: n must be at most 7")
    res = oracle.exact_decomposition_check(cfg["n"], _exact_p(cfg["p"]), cfg["H"])
    row = {k: (float(v) if isinstance(v, Fraction) else v) for k, v in res.items()}
    row.update(samples=0, seed=cfg["seed"])
    return [row], "csv", {"abs_mean_remainder": row["abs_mean_remainder"]}


RUNNERS = {
    "verify-assumptions": run_verify, "oracle-check": run_oracle, "distance": run_distance, "rate": run_rate,
    "bound": run_bound, "llt": run_llt, "decompose": run_decompose,
}


# ---------------------------------------------------------------------------
# output


def rows_to_csv(rows) -> str:
    if rows and set(empirics.CSV_COLUMNS) <= set(rows[0]):
        return empirics.rows_to_csv(rows)
    import csv
    import io

    cols = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    cols = [c for c in cols if c not in ("samples", "seed")] + ["samples", "seed"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: repr(v) if isinstance(v, float) else v for c, v in r.items()})
    return buf.getvalue()


def render(result, fmt: str) -> str:
    if fmt == "json":
        return to_json(result) + "\n"
    if isinstance(result, dict):
        result = [{k: v for k, v in result.items() if not isinstance(v, dict)}]
    return rows_to_csv(result)


def versions() -> dict:
    import numba
    import scipy

    return {"cclt": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(path: Path, command: str, cfg: dict, summary: dict, wall: float, result_file: str):
    lines = [f"command={command}"]
    lines += [f"config.{k}={'' if v is None else (','.join(map(str, v)) if isinstance(v, list) else v)}"
              for k, v in sorted(cfg.items())]
    lines += [f"seed={cfg['seed']}", f"result={result_file}"]
    lines += [f"version.{k}={v}" for k, v in sorted(versions().items())]
    lines += [f"summary.{k}={v}" for k, v in sorted(summary.items())]
    lines += [f"wall_time_s={wall:.3f}", f"timestamp={datetime.now(timezone.utc).isoformat()}"]
    path.write_text("\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cclt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter, epilog=CSV_HELP)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, epilog=CSV_HELP)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        sp.add_argument("--model", help=f"one of {', '.join(registered_models())}")
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--k", type=int, help="integer offset on the lattice of Y")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        sp.add_argument("--samples", type=int)
        sp.add_argument("--theorem", help="t21, l22, t23, t31, t31-3mom or l51")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--workers", type=int)
        sp.add_argument("--ns", help="comma-separated sizes for rate")
        sp.add_argument("--H", help="pattern for decompose: triangle, k4, p4, ...")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        start = time.perf_counter()
        result, default_fmt, summary = RUNNERS[args.command](cfg)
        wall = time.perf_counter() - start
    except (ValueError, ZeroDivisionError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fmt = cfg["format"] or default_fmt
    body = render(result, fmt)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    name = f"{args.command}.{fmt}"
    (out / name).write_text(body)
    write_manifest(out / "manifest.txt", args.command, cfg, summary, wall, name)
    sys.stdout.write(body)
    if summary:
        print(json.dumps(summary, sort_keys=True, default=float), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
