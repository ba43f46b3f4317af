"""Command-line front end: estimate | constant | validate | ruin-time.

Every emitted record echoes the full input configuration and seed, so any
output can be reproduced from its own fields.  Records never include wall
time (byte-identical reruns are part of the output contract); timing goes to
stderr instead.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import asymptotics, constants, estimators
from .analytic import norm_cdf
from .cache import ConstantCache
from .model import Grid, ModelParams, VariantParams, default_horizon

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_QUANTILE_POINTS = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return "" if x is None else str(x)


def _emit(record: dict, fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        keys = list(record)
        text = ",".join(keys) + "\n" + ",".join(_fmt(record[k]) for k in keys) + "\n"
    _write(text, out_path)


def _emit_table(rows: list[dict], fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        keys = list(rows[0])
        lines = [",".join(keys)]
        lines += [",".join(_fmt(r[k]) for k in keys) for r in rows]
        text = "\n".join(lines) + "\n"
    _write(text, out_path)


def _write(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str) -> dict:
    """Key-value config file: one `key = value` per line, '#' comments."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


def _variant_params(args) -> VariantParams:
    return VariantParams(
        gamma=getattr(args, "gamma", None),
        parisian_T=getattr(args, "T", None),
        cumulative_k=getattr(args, "k", None),
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write the record here instead of stdout")
    p.add_argument("--config", default=None, help="key-value config file; flags win")
    p.add_argument("--cache", default=None, help="constant cache file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridruin")
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="Monte Carlo ruin probability estimate")
    pe.add_argument("--variant", choices=estimators.VARIANTS, default="classical")
    pe.add_argument("--c", type=float, required=True)
    pe.add_argument("--u", type=float, required=True)
    pe.add_argument("--delta", type=float, required=True)
    pe.add_argument("--gamma", type=float, default=None)
    pe.add_argument("--T", type=float, default=None)
    pe.add_argument("--k", type=int, default=None)
    pe.add_argument("--method", choices=("crude", "tilted"), default="tilted")
    pe.add_argument("--n", type=int, default=None, help="default: crude 10^6, tilted 10^5")
    pe.add_argument("--horizon-mult", type=float, default=1.0)
    _add_common(pe)

    pc = sub.add_parser("constant", help="estimate a limiting constant")
    pc.add_argument("--kind", choices=constants._KINDS, required=True)
    pc.add_argument("--eta", type=float, required=True)
    pc.add_argument("--a", type=float, default=None)
    pc.add_argument("--T", type=float, default=None)
    pc.add_argument("--k", type=int, default=None)
    pc.add_argument("--trunc", type=float, default=None, help="truncation radius of the simulated window")
    pc.add_argument("--n", type=int, default=200_000)
    _add_common(pc)

    pv = sub.add_parser("validate", help="MC vs approximation ratio table over u")
    pv.add_argument("--variant", choices=estimators.VARIANTS, default="classical")
    pv.add_argument("--c", type=float, required=True)
    pv.add_argument("--u", required=True, help="comma-separated increasing list, e.g. 4,6,8,10")
    pv.add_argument("--delta", type=float, required=True)
    pv.add_argument("--gamma", type=float, default=None)
    pv.add_argument("--T", type=float, default=None)
    pv.add_argument("--k", type=int, default=None)
    pv.add_argument("--method", choices=("crude", "tilted"), default="tilted")
    pv.add_argument("--n", type=int, default=200_000)
    pv.add_argument("--constant-n", type=int, default=200_000)
    _add_common(pv)

    pr = sub.add_parser("ruin-time", help="conditional ruin-time CLT check")
    pr.add_argument("--variant", choices=estimators.VARIANTS, default="classical")
    pr.add_argument("--c", type=float, required=True)
    pr.add_argument("--u", type=float, required=True)
    pr.add_argument("--delta", type=float, required=True)
    pr.add_argument("--delta2", type=float, default=None, help="second grid step (default delta/2)")
    pr.add_argument("--gamma", type=float, default=None)
    pr.add_argument("--T", type=float, default=None)
    pr.add_argument("--k", type=int, default=None)
    pr.add_argument("--n", type=int, default=100_000)
    _add_common(pr)

    return parser


def cmd_estimate(args) -> int:
    params = ModelParams(c=args.c, u=args.u)
    grid = Grid(delta=args.delta)
    vp = _variant_params(args)
    n = args.n if args.n is not None else (1_000_000 if args.method == "crude" else 100_000)
    horizon = default_horizon(params, args.horizon_mult)
    est = estimators.estimate(
        args.variant,
        params,
        grid,
        vp,
        method=args.method,
        horizon=horizon,
        n=n,
        seed=args.seed,
        threads=args.threads,
    )
    lo, hi = est.ci95()
    record = {
        "variant": args.variant,
        "c": args.c,
        "u": args.u,
        "delta": args.delta,
        "gamma": vp.gamma,
        "T": vp.parisian_T,
        "k": vp.cumulative_k,
        "method": est.method,
        "n": est.n,
        "seed": args.seed,
        "horizon": horizon,
        "value": est.value,
        "std_error": est.std_error,
        "ci_lo": lo,
        "ci_hi": hi,
        "horizon_bias_bound": est.horizon_bias_bound,
    }
    _emit(record, args.format, args.out)
    return EXIT_OK


def cmd_constant(args) -> int:
    defaults = {"berman": 40.0, "piterbarg": 30.0}
    trunc = args.trunc if args.trunc is not None else defaults.get(args.kind, 20.0)
    key = constants.ConstantKey(
        kind=args.kind,
        eta=args.eta,
        trunc=trunc,
        n_samples=args.n,
        seed=args.seed,
        a=args.a,
        T=args.T,
        k=args.k,
    )
    cache = ConstantCache(args.cache) if args.cache else None
    value, cached = constants.resolve_constant(key, cache)
    record = {
        "kind": key.kind,
        "eta": key.eta,
        "a": key.a,
        "T": key.T,
        "k": key.k,
        "trunc": key.trunc,
        "n": key.n_samples,
        "seed": key.seed,
        "estimate": value.estimate,
        "std_error": value.std_error,
        "boundary_fraction": value.boundary_fraction,
        "cached": cached,
    }
    if value.warn:
        print(
            f"warning: boundary_fraction={value.boundary_fraction:.3g} > 0.01; "
            "truncation may bias the estimate",
            file=sys.stderr,
        )
    _emit(record, args.format, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        u_values = [float(tok) for tok in args.u.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"--u must be a comma-separated float list: {exc}") from None
    grid = Grid(delta=args.delta)
    vp = _variant_params(args)
    cache = ConstantCache(args.cache) if args.cache else None
    rows = asymptotics.validate_ratio(
        args.variant,
        u_values,
        args.c,
        grid,
        vp,
        method=args.method,
        n=args.n,
        seed=args.seed,
        constant_n=args.constant_n,
        cache=cache,
    )
    extra = vp.gamma if vp.gamma is not None else vp.parisian_T
    if extra is None:
        extra = vp.cumulative_k
    table = [
        {
            "variant": args.variant,
            "u": r.u,
            "c": args.c,
            "delta": args.delta,
            "extra": extra,
            "mc": r.mc,
            "mc_se": r.mc_se,
            "approx": r.approx,
            "approx_se": r.approx_se,
            "ratio": r.ratio,
            "ratio_se": r.ratio_se,
        }
        for r in rows
    ]
    _emit_table(table, args.format, args.out)
    return EXIT_OK


def cmd_ruintime(args) -> int:
    params = ModelParams(c=args.c, u=args.u)
    vp = _variant_params(args)
    delta2 = args.delta2 if args.delta2 is not None else args.delta / 2.0

    def ks_for(delta):
        s, w = estimators.ruin_time_distribution(
            args.variant, params, Grid(delta=delta), vp, n=args.n, seed=args.seed
        )
        return s, w, estimators.weighted_ks(s, w, norm_cdf)

    s1, w1, ks1 = ks_for(args.delta)
    _, _, ks2 = ks_for(delta2)

    order = np.argsort(s1, kind="stable")
    cum = np.cumsum(w1[order])
    cum /= cum[-1]
    s_sorted = s1[order]
    rows = [
        {
            "row_type": "ks",
            "s": None,
            "emp_cdf": None,
            "normal_cdf": None,
            "delta": args.delta,
            "value": ks1,
        },
        {
            "row_type": "ks",
            "s": None,
            "emp_cdf": None,
            "normal_cdf": None,
            "delta": delta2,
            "value": ks2,
        },
        {
            "row_type": "ks_diff",
            "s": None,
            "emp_cdf": None,
            "normal_cdf": None,
            "delta": None,
            "value": abs(ks1 - ks2),
        },
    ]
    for q in _QUANTILE_POINTS:
        i = int(np.searchsorted(s_sorted, q, side="right"))
        emp = float(cum[i - 1]) if i > 0 else 0.0
        rows.append(
            {
                "row_type": "quantile",
                "s": q,
                "emp_cdf": emp,
                "normal_cdf": float(norm_cdf(q)),
                "delta": args.delta,
                "value": None,
            }
        )
    _emit_table(rows, args.format, args.out)
    return EXIT_OK


_COMMANDS = {
    "estimate": cmd_estimate,
    "constant": cmd_constant,
    "validate": cmd_validate,
    "ruin-time": cmd_ruintime,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)

    # Pre-scan for --config so file values become defaults that flags override.
    if "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
        except IndexError:
            parser.error("--config requires a path")
        try:
            cfg = _load_config(cfg_path)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            known = {a.dest for a in action._actions}
            typed = {a.dest: a.type for a in action._actions}
            overrides = {}
            for k, v in cfg.items():
                if k in known:
                    overrides[k] = typed[k](v) if typed.get(k) else v
            action.set_defaults(**overrides)
            for a in action._actions:
                if a.dest in overrides and a.required:
                    a.required = False

    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        status = _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wall_time_s={time.perf_counter() - start:.3f}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
