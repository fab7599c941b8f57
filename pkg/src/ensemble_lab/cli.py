"""Command-line front end.

Every subcommand writes one self-describing artifact: CSV files carry
``#``-prefixed metadata lines, JSON files a ``config`` block.  Floats are
written with 12 significant digits so identical configs give identical bytes.

Exit codes: 0 success, 1 budget exhausted or oracle mismatch, 2 invalid
parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from math import comb
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import (
    beta_chain_array,
    exponent_rma_array,
    growth_rate,
    gvb_growth_rate,
    max_exponent_at_rho,
)
from .combinatorics import DomainError
from .enumerators import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    EnsembleSpec,
    acc_conditional_prob_exact,
    ensemble_spectrum,
    exact_iowe_table,
    finite_length_dmin_bound,
)
from .oracle import brute_accumulator_iowe, brute_punctured, brute_uniform_interleaver

TOOL = "ensemble-lab"
SUBCOMMANDS = ("finite", "asymptotic", "puncture", "gvb", "oracle-check", "sweep")
THREADS_ENV = "ENSEMBLE_LAB_THREADS"


class ConfigError(ValueError):
    """Invalid run parameter; the message names the offending flag."""


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    output: Path | None = None
    fmt: str = "json"


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return "" if x is None else str(x)


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if np.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _parallel_map(fn, items: list) -> list:
    """Ordered map; uses worker processes when ENSEMBLE_LAB_THREADS > 1."""
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- validation ------------------------------------------------------------


def _require(cond: bool, flag: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{flag}: {msg}")


def _validate_q_m(q: int, M: int) -> None:
    _require(q >= 2, "--q", f"must be >= 2, got {q}")
    _require(M >= 1, "--M", f"must be >= 1, got {M}")


def _validate_rate_punctured(q: int, rp: float) -> None:
    _require(0 < rp < 1, "--rate-punctured", f"must lie in (0, 1), got {rp}")
    _require(rp >= 1.0 / q, "--rate-punctured", f"must be >= mother rate 1/{q}, got {rp}")


def _finite_spec(q: int, M: int, N: int, n_prime: int | None, rate_punctured: float | None) -> EnsembleSpec:
    _validate_q_m(q, M)
    _require(N >= q and N % q == 0, "--N", f"must be a positive multiple of q={q}, got {N}")
    K = N // q
    if rate_punctured is not None:
        _validate_rate_punctured(q, rate_punctured)
        n_prime = round(K / rate_punctured)
    if n_prime is not None:
        _require(1 <= n_prime <= N, "--N-prime", f"must satisfy 1 <= N' <= N={N}, got {n_prime}")
    return EnsembleSpec(q, M, K, n_kept=n_prime)


# -- subcommands -----------------------------------------------------------


def _finite_row(spec: EnsembleSpec, fraction: float, budget: int) -> dict:
    delta = finite_length_dmin_bound(spec, fraction, budget=budget)
    return {
        "q": spec.q,
        "M": spec.M,
        "K": spec.K,
        "N": spec.N,
        "N_prime": spec.n_kept,
        "fraction": fraction,
        "delta_star": delta,
        "delta_star_over_N": delta / spec.block_length,
    }


def _cmd_finite(p: dict):
    spec = _finite_spec(p["q"], p["M"], p["N"], p.get("N_prime"), p.get("rate_punctured"))
    _require(0 < p["fraction"] < 1, "--fraction", f"must lie in (0, 1), got {p['fraction']}")
    if p.get("spectrum"):
        spectrum = ensemble_spectrum(spec, budget=p["budget"])
        return "spectrum", spectrum
    return "rows", [_finite_row(spec, p["fraction"], p["budget"])]


def _growth_row(args: tuple) -> dict:
    q, M, rp, tol = args
    return growth_rate(q, M, rp, tol=tol).to_dict()


def _cmd_asymptotic(p: dict):
    _validate_q_m(p["q"], p["M"])
    return "object", _growth_row((p["q"], p["M"], None, p["tol"]))


def _cmd_puncture(p: dict):
    _validate_q_m(p["q"], p["M"])
    _validate_rate_punctured(p["q"], p["rate_punctured"])
    return "object", _growth_row((p["q"], p["M"], p["rate_punctured"], p["tol"]))


def _cmd_gvb(p: dict):
    _require(0 < p["rate"] < 1, "--rate", f"must lie in (0, 1), got {p['rate']}")
    return "object", {"rate": p["rate"], "gvb": gvb_growth_rate(p["rate"])}


def oracle_checks() -> list[dict]:
    """Exact closed-form vs brute-force comparisons at tiny block lengths."""
    rows = []
    for n in range(1, 13):
        counts = brute_accumulator_iowe(n)
        ok = all(
            counts.get((w, d), 0) == acc_conditional_prob_exact(n, w, d) * comb(n, w)
            for w in range(n + 1)
            for d in range(n + 1)
        )
        rows.append({"check": "accumulator", "q": None, "M": 1, "K": None, "N": n, "N_prime": None, "match": ok})
    cases = [(q, 1, K, None) for q in (2, 3) for K in range(1, 8) if q * K <= 7]
    cases += [(3, 2, 2, None), (2, 2, 3, None), (3, 2, 2, 4)]
    for q, M, K, n_prime in cases:
        spec = EnsembleSpec(q, M, K, n_kept=n_prime)
        brute = brute_punctured(spec) if n_prime else brute_uniform_interleaver(spec)
        ok = brute.counts == exact_iowe_table(spec)
        rows.append(
            {"check": "punctured" if n_prime else "interleaver", "q": q, "M": M, "K": K, "N": spec.N,
             "N_prime": n_prime, "match": ok}
        )
    return rows


def _cmd_oracle(p: dict):
    return "rows", oracle_checks()


def _rho_row(args: tuple) -> dict:
    q, M, rho, rp = args
    eta = None if rp is None else (1.0 / q) / rp
    res = max_exponent_at_rho(rho, q, M, eta)
    return {
        "q": q,
        "M": M,
        "rate_punctured": rp,
        "rho": rho,
        "max_exponent": res.value,
        "stationary": res.stationary,
        "certified_negative": res.certified_negative,
    }


def _cmd_sweep(p: dict):
    kind = p["kind"]
    qs, Ms = p["q"], p["M"]
    for q in qs:
        for M in Ms:
            _validate_q_m(q, M)
    if kind == "rho":
        _require(0 < p["rho_min"] < p["rho_max"] < 0.5, "--rho-min/--rho-max", "need 0 < min < max < 1/2")
        _require(p["points"] >= 2, "--points", f"must be >= 2, got {p['points']}")
        grid = np.linspace(p["rho_min"], p["rho_max"], p["points"])
        rates = p.get("rates") or [None]
        for r in rates:
            if r is not None:
                for q in qs:
                    _validate_rate_punctured(q, r)
        tasks = [(q, M, float(r), rp) for q in qs for M in Ms for rp in rates for r in grid]
        return "rows", _parallel_map(_rho_row, tasks)
    if kind == "growth":
        tasks = [(q, M, None, p["tol"]) for q in qs for M in Ms]
        return "rows", [_flatten_growth(r) for r in _parallel_map(_growth_row, tasks)]
    if kind == "puncture":
        _require(bool(p.get("rates")), "--rates", "required for a puncture sweep")
        for q in qs:
            for r in p["rates"]:
                _validate_rate_punctured(q, r)
        tasks = [(q, M, r, p["tol"]) for q in qs for M in Ms for r in p["rates"]]
        return "rows", [_flatten_growth(r) for r in _parallel_map(_growth_row, tasks)]
    if kind == "finite":
        _require(bool(p.get("N")), "--N", "required for a finite sweep")
        _require(0 < p["fraction"] < 1, "--fraction", f"must lie in (0, 1), got {p['fraction']}")
        specs = [
            _finite_spec(q, M, N, None, rp)
            for q in qs
            for M in Ms
            for rp in (p.get("rates") or [None])
            for N in p["N"]
        ]
        fn = partial(_finite_row, fraction=p["fraction"], budget=p["budget"])
        return "rows", _parallel_map(fn, specs)
    if kind == "gvb":
        _require(bool(p.get("rates")), "--rates", "required for a gvb sweep")
        for r in p["rates"]:
            _require(0 < r < 1, "--rates", f"must lie in (0, 1), got {r}")
        return "rows", [{"rate": r, "gvb": gvb_growth_rate(r)} for r in p["rates"]]
    if kind == "surface":
        return "rows", _surface_rows(qs, p["rho"], p["points"])
    if kind == "chain":
        _require(p["points"] >= 2, "--points", f"must be >= 2, got {p['points']}")
        return "rows", _chain_rows(qs, Ms, p["points"])
    raise ConfigError(f"--kind: unknown sweep kind {kind!r}")


def _surface_rows(qs: list[int], rhos: list[float] | None, points: int) -> list[dict]:
    """RAA exponent f(alpha, beta, rho) on a square grid; blank outside the region."""
    _require(bool(rhos), "--rho", "required for a surface sweep")
    for r in rhos:
        _require(0 < r <= 0.5, "--rho", f"must lie in (0, 1/2], got {r}")
    _require(points >= 2, "--points", f"must be >= 2, got {points}")
    axis = np.linspace(0, 1, points + 1)[1:]
    a, b = (m.ravel() for m in np.meshgrid(axis, axis, indexing="ij"))
    rows = []
    for q in qs:
        for r in rhos:
            vals = exponent_rma_array(np.stack([a, b, np.full(a.shape, r)], axis=1), q)
            for ai, bi, v in zip(a, b, vals):
                inside = bool(np.isfinite(v))
                rows.append({"q": q, "rho": r, "alpha": float(ai), "beta": float(bi), "in_region": inside,
                             "exponent": float(v) if inside else None})
    return rows


def _chain_rows(qs: list[int], Ms: list[int], points: int) -> list[dict]:
    """Stationary-point curve: weights as functions of the free input weight alpha."""
    alphas = np.geomspace(1e-6, 0.5, points)
    rows = []
    for q in qs:
        for M in Ms:
            for row in beta_chain_array(alphas, q, M):
                ok = bool(np.all(np.isfinite(row)))
                rows.append({
                    "q": q,
                    "M": M,
                    "alpha": float(row[0]),
                    "betas": " ".join(f"{x:.12g}" for x in row[1:-1]) if ok else None,
                    "rho": float(row[-1]) if ok else None,
                })
    return rows


def _flatten_growth(d: dict) -> dict:
    arg = d.pop("arg_max") or {}
    d.pop("bracket", None)
    d["arg_alpha"] = arg.get("alpha")
    d["arg_betas"] = " ".join(f"{b:.12g}" for b in arg.get("betas", []))
    d["arg_rho"] = arg.get("rho")
    d.setdefault("rate_punctured", None)
    d.setdefault("eta", None)
    return d


_DISPATCH = {
    "finite": _cmd_finite,
    "asymptotic": _cmd_asymptotic,
    "puncture": _cmd_puncture,
    "gvb": _cmd_gvb,
    "oracle-check": _cmd_oracle,
    "sweep": _cmd_sweep,
}


# -- output ----------------------------------------------------------------


def _header_lines(config: RunConfig) -> list[str]:
    lines = [f"{TOOL} {__version__}", f"command: {config.subcommand}"]
    lines += [f"{k}: {_fmt_param(v)}" for k, v in sorted(config.params.items())]
    return lines


def _fmt_param(v) -> str:
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return _fmt(v)


def render(config: RunConfig, kind: str, payload) -> str:
    if config.fmt == "json":
        if kind == "spectrum":
            payload = {
                "block_length": payload.block_length,
                "log_expected_count": [float(x) for x in payload.log_counts],
            }
        doc = {
            "config": {"tool": TOOL, "version": __version__, "command": config.subcommand,
                       "params": config.params},
            "result": payload,
        }
        return json.dumps(_round_floats(doc), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for line in _header_lines(config):
        buf.write(f"# {line}\n")
    if kind == "spectrum":
        buf.write(payload.to_csv())
        return buf.getvalue()
    rows = payload if kind == "rows" else [payload]
    if isinstance(rows[0].get("arg_max"), dict):
        rows = [_flatten_growth(dict(r)) for r in rows]
    columns = list(rows[0].keys())
    buf.write("# columns: " + ", ".join(columns) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def run(config: RunConfig) -> int:
    """Execute one configured analysis and write its artifact."""
    if config.subcommand not in _DISPATCH:
        raise ConfigError(f"subcommand: unknown {config.subcommand!r}")
    if config.fmt not in ("json", "csv"):
        raise ConfigError(f"--format: must be csv or json, got {config.fmt!r}")
    worker_count()
    kind, payload = _DISPATCH[config.subcommand](config.params)
    text = render(config, kind, payload)
    if config.output is None:
        sys.stdout.write(text)
    else:
        config.output.write_text(text, encoding="utf-8")
    if config.subcommand == "oracle-check" and not all(r["match"] for r in payload):
        return 1
    return 0


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp, fmt="json"):
        sp.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default=fmt)

    sp = sub.add_parser("finite", help="finite-length median minimum-distance bound")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--N", type=int, required=True, help="mother block length N = qK")
    sp.add_argument("--N-prime", dest="N_prime", type=int, default=None, help="length after puncturing")
    sp.add_argument("--rate-punctured", type=float, default=None)
    sp.add_argument("--fraction", type=float, default=0.5)
    sp.add_argument("--spectrum", action="store_true", help="emit the full weight spectrum instead")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(sp)

    for name, text in (("asymptotic", "growth-rate bound of an RMA ensemble"),
                       ("puncture", "growth-rate bound after random puncturing")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--q", type=int, required=True)
        sp.add_argument("--M", type=int, required=True)
        if name == "puncture":
            sp.add_argument("--rate-punctured", type=float, required=True)
        sp.add_argument("--tol", type=float, default=1e-6)
        common(sp)

    sp = sub.add_parser("gvb", help="Gilbert-Varshamov relative distance")
    sp.add_argument("--rate", type=float, required=True)
    common(sp)

    sp = sub.add_parser("oracle-check", help="exact closed-form vs brute-force comparison")
    common(sp, fmt="csv")

    sp = sub.add_parser("sweep", help="tabulate figure/table data over a grid")
    sp.add_argument(
        "--kind", choices=("rho", "growth", "puncture", "finite", "gvb", "surface", "chain"), required=True
    )
    sp.add_argument("--q", type=int, nargs="+", default=[3])
    sp.add_argument("--M", type=int, nargs="+", default=[2])
    sp.add_argument("--rates", type=float, nargs="+", default=None, help="punctured rates (or GVB rates)")
    sp.add_argument("--rho-min", type=float, default=0.05)
    sp.add_argument("--rho-max", type=float, default=0.45)
    sp.add_argument("--rho", type=float, nargs="+", default=None, help="fixed weights for a surface sweep")
    sp.add_argument("--points", type=int, default=41)
    sp.add_argument("--N", type=int, nargs="+", default=None)
    sp.add_argument("--fraction", type=float, default=0.5)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--tol", type=float, default=1e-6)
    common(sp, fmt="csv")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "out", "fmt")}
    return RunConfig(ns.subcommand, params, ns.out, ns.fmt)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(config_from_args(ns))
    except (ConfigError, DomainError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"{TOOL}: budget exhausted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
