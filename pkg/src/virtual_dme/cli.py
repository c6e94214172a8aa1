"""Command-line experiment runner.

Every subcommand reads an optional flat ``key=value`` config file and lets
flags override it.  Output is a versioned CSV (see ``csvio``) written to
``--out`` or stdout.  Exit codes: 0 success, 2 validation error, 3 infeasible
filter design, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import csvio, estimator, qpca
from .linalg import dagger, random_state
from .rng import derive_stream, make_rng
from .series import build_series, copy_count_bound, mean_copy_count, truncated_series_matrix
from .superop import diamond_bounds, sandwich
from .vdme import (
    build_pure,
    default_pure_r,
    exact_mean_pure,
    lmr_copy_count,
    sample_indices,
    series_power_error,
    target_channel,
)

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


class ValidationError(ValueError):
    pass


# configuration

_TYPES = {
    "seed": int,
    "workers": int,
    "T": float,
    "r": int,
    "dim": int,
    "eps_min": float,
    "eps_max": float,
    "points": int,
    "lambda": float,
    "eta": float,
    "eps1": float,
    "eps2": float,
    "shots": int,
    "M": int,
    "kinds": str,
    "t_max": float,
    "gamma": float,
    "eps": float,
    "obs_norm": float,
    "max_order": int,
    "states": int,
    "samples": int,
    "err_spectrum": str,
    "log": str,
    "out": str,
    "chunk": int,
}


def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ValidationError(f"{path}:{n}: expected key=value")
        if key not in _TYPES:
            raise ValidationError(f"{path}:{n}: unknown key {key!r}")
        out[key] = val.strip()
    return out


def _coerce(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if v is None:
            continue
        try:
            out[k] = _TYPES.get(k, str)(v)
        except ValueError as e:
            raise ValidationError(f"bad value for {k}: {v!r}") from e
    return out


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    cfg = dict(defaults)
    if args.config:
        cfg.update(read_config(args.config))
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command", "func") and v is not None}
    cfg.update(flags)
    return _coerce(cfg)


def _need_seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        raise ValidationError("--seed is required for stochastic runs")
    if not 0 <= cfg["seed"] < 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    return cfg["seed"]


def _check(cond: bool, msg: str):
    if not cond:
        raise ValidationError(msg)


def _eps_grid(cfg: dict) -> np.ndarray:
    lo, hi, n = cfg["eps_min"], cfg["eps_max"], cfg["points"]
    _check(0 < lo <= hi, "need 0 < eps-min <= eps-max")
    _check(n >= 1, "points must be positive")
    return np.logspace(math.log10(lo), math.log10(hi), n) if n > 1 else np.array([lo])


# dme-sweep

DME_COLUMNS = [
    "eps", "L", "worst_copies", "worst_observed", "mean_copies", "pure_copies",
    "lmr_copies", "lmr_analytic", "overhead", "opnorm_err", "choi_upper",
]


def _dme_point(args):
    T, r, eps, rho, samples, seed, i = args
    spec = build_series(T, r, eps)
    rng = make_rng(seed, derive_stream(1, i))
    draws = sample_indices(spec.probs, r, rng, size=samples)
    observed = int(np.max(2 * r + 2 * draws.sum(axis=1)))
    s = np.linalg.matrix_power(truncated_series_matrix(spec, rho), r)
    choi_upper = diamond_bounds(sandwich(s, dagger(s)), target_channel(rho, T))[1]
    lmr = lmr_copy_count(T, eps, rho)
    return [
        float(eps), spec.L, copy_count_bound(spec), observed, mean_copy_count(spec),
        2 * default_pure_r(T), lmr.measured, lmr.analytic, spec.overhead,
        series_power_error(spec, rho), choi_upper,
    ]


def cmd_dme_sweep(cfg: dict) -> tuple[list, list, dict]:
    seed = _need_seed(cfg)
    T, r, d = cfg["T"], cfg.get("r"), cfg["dim"]
    _check(T != 0, "T must be nonzero")
    r = r if r is not None else max(1, math.ceil(2 * T * T), math.ceil(abs(T)))
    _check(r >= abs(T), "r must be at least |T|")
    grid = _eps_grid(cfg)
    _check(grid.max() < 0.5, "eps must stay below 1/2")
    rho = random_state(d, "mixed", seed=make_rng(seed, derive_stream(0))).mat
    jobs = [(T, r, e, rho, cfg["samples"], seed, i) for i, e in enumerate(grid)]
    rows = _map(_dme_point, jobs, cfg["workers"])
    return DME_COLUMNS, rows, {"T": T, "r": r, "dim": d, "seed": seed}


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# mc-estimate

MC_COLUMNS = [
    "mean", "std_error", "exact", "truth", "bias_bound", "overhead", "samples",
    "copies_min", "copies_mean", "copies_max",
]


def cmd_mc_estimate(cfg: dict) -> tuple[list, list, dict]:
    seed = _need_seed(cfg)
    _check(cfg["shots"] >= 1, "shots must be positive")
    _check(cfg["M"] >= 1, "M must be positive")
    kinds = [k.strip() for k in cfg["kinds"].split(",")]
    if len(kinds) == 1:
        kinds = kinds * cfg["M"]
    _check(all(k in estimator.KINDS for k in kinds), f"kinds must be among {estimator.KINDS}")
    plan = estimator.random_plan(cfg["dim"], cfg["M"], seed, kinds, cfg["t_max"], obs_norm=cfg["obs_norm"])
    gamma = cfg.get("gamma")
    _check(gamma is None or gamma > 1, "gamma must exceed 1")
    group_log = [] if cfg.get("log") else None
    rep = estimator.estimate_shots(
        plan, cfg["shots"], seed, cfg["eps"], gamma, workers=cfg["workers"], chunk=cfg["chunk"], log=group_log
    )
    exact = estimator.estimate_exact(plan, cfg["eps"], gamma)
    truth = estimator.direct_truth(plan)
    if group_log is not None:
        _write(cfg["log"], ["path", "eigenvalue", "count"], [[_path_str(p), o, c] for p, o, c in group_log], {"seed": seed})
    row = [
        rep.mean_estimate, rep.std_error, exact, truth, rep.bias_bound, rep.overhead, rep.samples,
        rep.copies_min, rep.copies_mean, rep.copies_max,
    ]
    return MC_COLUMNS, [row], {"seed": seed, "dim": cfg["dim"], "M": cfg["M"], "kinds": ",".join(kinds)}


def _path_str(path) -> str:
    return "|".join(" ".join(map(str, idx)) + (":+" if s > 0 else ":-") for idx, s in path)


# filter-design


def cmd_filter_design(cfg: dict) -> tuple[list, list, dict]:
    eta, e1, e2 = cfg["eta"], cfg["eps1"], cfg["eps2"]
    _check(0 < eta < 0.5, "eta must lie in (0, 1/2)")
    _check(0 < e1 < 1 and 0 < e2 < 1, "eps1 and eps2 must lie in (0, 1)")
    fs = qpca.design_filter(eta, e1, e2, cfg["max_order"])
    rows = [[k, float(v)] for k, v in enumerate(fs.f)]
    meta = {"M_f": fs.M_f, "eta": eta, "eps1": e1, "eps2": e2, "pass_err": fs.pass_err, "stop_err": fs.stop_err}
    return ["k", "f"], rows, meta


def load_filter(path) -> qpca.FilterSpec:
    """Rebuild a FilterSpec from a ``filter-design`` CSV."""
    _, rows, meta = csvio.read_table(path)
    f = np.array([float(r["f"]) for r in sorted(rows, key=lambda r: int(r["k"]))])
    return qpca.FilterSpec(
        f, float(meta["eta"]), float(meta["eps1"]), float(meta["eps2"]),
        float(meta["pass_err"]), float(meta["stop_err"]),
    )


# qpca-compare

QPCA_COLUMNS = ["delta", "method", "copies_per_circuit", "p25", "p50", "p95", "overhead", "order"]


def _spectrum(cfg: dict):
    s = cfg.get("err_spectrum")
    if not s:
        return None
    return [float(x) for x in s.split(",")]


def cmd_qpca_compare(cfg: dict) -> tuple[list, list, dict]:
    seed = _need_seed(cfg)
    lam = cfg["lambda"]
    eta = cfg.get("eta", lam)
    _check(0 <= lam < 0.5, "lambda must lie in [0, 1/2)")
    _check(lam <= eta < 0.5, "eta must lie in [lambda, 1/2)")
    nm = qpca.make_noise_model(cfg["dim"], lam, make_rng(seed, derive_stream(0)), eta, _spectrum(cfg))
    grid = _eps_grid(cfg)
    rows = qpca.compare_sweep(nm, grid, cfg["eps1"], seed=seed, n_mc=cfg["samples"], max_order=cfg["max_order"])
    out = [[r.delta, r.method, r.copies_per_circuit, r.p25, r.p50, r.p95, r.overhead, r.order] for r in rows]
    return QPCA_COLUMNS, out, {"lambda": lam, "eta": eta, "eps1": cfg["eps1"], "seed": seed}


# pure-dme-check

PURE_COLUMNS = ["dim", "T", "r", "max_choi_upper", "overhead"]


def cmd_pure_dme_check(cfg: dict) -> tuple[list, list, dict]:
    seed = _need_seed(cfg)
    n = cfg["states"]
    _check(n >= 1, "states must be positive")
    dims = [cfg["dim"]] if "dim" in cfg and cfg["dim"] != 0 else [2, 4, 8]
    times = [cfg["T"]] if cfg.get("T") else [0.5, 1.0, math.pi, 2 * math.pi]
    rows = []
    for d in dims:
        for T in times:
            ps = build_pure(T, cfg.get("r") or default_pure_r(T))
            worst = 0.0
            for i in range(n):
                psi = random_state(d, "pure", seed=make_rng(seed, derive_stream(d, i))).mat
                scaled = exact_mean_pure(ps, psi) * ps.overhead
                worst = max(worst, diamond_bounds(scaled, target_channel(psi, T))[1])
            rows.append([d, float(T), ps.r, worst, ps.overhead])
    print(f"max residual: {max(r[3] for r in rows):.3e}", file=sys.stderr)
    return PURE_COLUMNS, rows, {"seed": seed, "states": n}


# entry point

COMMANDS = {
    "dme-sweep": (cmd_dme_sweep, {"T": 1.0, "dim": 2, "eps_min": 1e-8, "eps_max": 1e-1, "points": 25, "samples": 10000, "workers": 1}),
    "mc-estimate": (cmd_mc_estimate, {"dim": 4, "M": 2, "kinds": "general", "t_max": 1.0, "eps": 1e-3, "shots": 100000, "obs_norm": 1.0, "workers": 1, "chunk": estimator.DEFAULT_CHUNK}),
    "filter-design": (cmd_filter_design, {"eta": 0.2, "eps1": 1e-3, "eps2": 1e-3, "max_order": qpca.ORDER_CAP}),
    "qpca-compare": (cmd_qpca_compare, {"lambda": 0.2, "dim": 4, "eps1": 1e-3, "eps_min": 1e-8, "eps_max": 1e-1, "points": 8, "samples": 20000, "max_order": qpca.ORDER_CAP, "workers": 1}),
    "pure-dme-check": (cmd_pure_dme_check, {"states": 50, "dim": 0, "workers": 1}),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vdme", description="Virtual density-matrix exponentiation experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config")
        s.add_argument("--seed")
        s.add_argument("--out")
        s.add_argument("--workers")
        s.add_argument("--T", dest="T")
        s.add_argument("--r", dest="r")
        s.add_argument("--dim")
        s.add_argument("--eps-min", dest="eps_min")
        s.add_argument("--eps-max", dest="eps_max")
        s.add_argument("--points")
        s.add_argument("--lambda", dest="lambda")
        s.add_argument("--eta")
        s.add_argument("--eps1")
        s.add_argument("--eps2")
        s.add_argument("--shots")
        s.add_argument("--samples")
        s.add_argument("--log")
        if name == "mc-estimate":
            s.add_argument("--M", dest="M")
            s.add_argument("--kinds")
            s.add_argument("--gamma")
            s.add_argument("--eps")
        if name == "qpca-compare":
            s.add_argument("--err-spectrum", dest="err_spectrum")
        if name in ("filter-design", "qpca-compare"):
            s.add_argument("--max-order", dest="max_order")
        if name == "pure-dme-check":
            s.add_argument("--states")
    return p


def _write(path, columns, rows, meta):
    text = csvio.render(columns, rows, meta)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    fn, defaults = COMMANDS[args.command]
    del args.verbose
    try:
        cfg = resolve(args, defaults)
        columns, rows, meta = fn(cfg)
        _write(cfg.get("out"), columns, rows, meta)
    except qpca.FilterDesignError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
