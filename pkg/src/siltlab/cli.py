"""Batch command-line front door.

Subcommands: fbm, estimate, constants, classify, mc-clt, mc-l2, chaos-check.
Options come from flags, optionally seeded from a JSON config file (flags
override the file).  Outputs are machine-readable (JSON / CSV with LF line
endings and 17-significant-digit decimals) and embed the resolved config.

Exit codes: 0 success, 2 invalid or out-of-regime parameters, 3 quadrature
non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .errors import SiltError
from .fbm import (GridSpec, Hurst, as_hurst, gen_cholesky, gen_circulant,
                  write_csv, write_binary)
from .quadrature import QuadSpec
from .silt import classify, estimate_ie, scaling_r

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_QUAD = 3
EXIT_IO = 4


def parse_hurst(text: str) -> Hurst:
    """H as an exact rational "p/q" or a decimal string."""
    text = text.strip()
    try:
        if "/" in text:
            return Hurst.parse(text)
        return as_hurst(float(text))
    except Exception as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


def _csv_lines(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _set_threads(args) -> int:
    threads = getattr(args, "threads", None)
    if threads is None:
        threads = int(os.environ.get("SILT_THREADS", "0")) or None
    # thread count may change wall-clock only; results are fixed by seeds and
    # deterministic reductions, so this is purely advisory to BLAS
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    return threads or 0


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict):
    """Merge a JSON config file under explicit flags."""
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        file_cfg = json.load(fh)
    for key, value in file_cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        # a flag left at its parser default is overridden by the file
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)
    return args


def _resolved_config(args) -> dict:
    skip = {"func", "config"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip or callable(v):
            continue
        if isinstance(v, Hurst):
            v = str(v.rational) if v.rational is not None else v.value
        out[k] = v
    return out


def cmd_fbm(args) -> int:
    H = args.H
    grid = GridSpec(n=args.n, T=args.T, d=args.d)
    gen = gen_cholesky if args.method == "cholesky" else gen_circulant
    path = gen(H, grid, args.seed)
    if args.format == "csv":
        write_csv(path, args.out)
    else:
        write_binary(path, args.out)
    meta = {"config": _resolved_config(args), "method": path.method,
            "out": args.out}
    if args.meta:
        _emit(meta, args.meta)
    return EXIT_OK


def cmd_estimate(args) -> int:
    from .fbm import read_csv, read_binary

    if args.input.endswith(".csv"):
        path = read_csv(args.input, H=args.H, T=args.T)
    else:
        path = read_binary(args.input, T=args.T)
    value = estimate_ie(path, args.eps, override=args.override)
    payload = {"config": _resolved_config(args), "I_eps": value,
               "eps": args.eps, "input": args.input}
    _emit(payload, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    regime = classify(args.H, args.d)
    payload = {"config": _resolved_config(args), "regime": regime.tag.value}
    if regime.is_clt:
        payload["scaling"] = (
            "(log(1/eps))^-1/2" if regime.tag.value == "CLT-Log"
            else f"eps^({0.5 * regime.d} - 3/(4H))"
        )
        payload["scaling_r_at_0.01"] = scaling_r(regime, 0.01)
    _emit(payload, args.out)
    return EXIT_OK


def cmd_constants(args) -> int:
    from .chaos import alpha_m, chaos_variance
    from .limits import (chaos_limit_variance, sigma2_for_regime, xi_t)
    from .silt import chd

    spec = QuadSpec(rel_tol=args.tol, abs_tol=args.tol * 1e-4) \
        if args.tol else None
    H, d = args.H, args.d
    if args.what == "chd":
        res = chd(H, d, spec)
    elif args.what == "xi":
        res = xi_t(H, d, args.T, spec)
    elif args.what == "sigma2":
        res = sigma2_for_regime(classify(H, d), spec)
    elif args.what == "chaos-var":
        res = chaos_variance(H, d, args.eps, args.m, args.T, spec)
    elif args.what == "chaos-limit":
        res = chaos_limit_variance(H, d, args.m, spec)
    else:
        raise SiltError(f"unknown constant {args.what!r}")

    payload = {
        "config": _resolved_config(args),
        "quantity": args.what,
        "value": res.value,
        "err_estimate": res.err_estimate,
        "evals": res.evals,
        "converged": res.converged,
    }
    if args.csv:
        hv = as_hurst(H).value
        _write_text(
            args.csv,
            "H,d,quantity,value,err_estimate,evals\n"
            f"{_fmt(hv)},{d},{args.what},{_fmt(res.value)},"
            f"{_fmt(res.err_estimate)},{res.evals}\n")
    _emit(payload, args.out)
    return EXIT_QUAD if not res.converged else EXIT_OK


def _mc_config(args, experiment: str):
    from .mc import McConfig

    eps = tuple(args.eps) if isinstance(args.eps, (list, tuple)) \
        else (args.eps,)
    kwargs = dict(H=args.H, d=args.d, n=args.n, T=args.T, eps=eps,
                  paths=args.paths, seed=args.seed, experiment=experiment,
                  override=args.override)
    if experiment == "chaos-check":
        kwargs["m_orders"] = tuple(args.m_orders)
    return McConfig(**kwargs)


def _emit_mc(report, args) -> int:
    payload = report.to_dict()
    _emit(payload, args.out)
    if getattr(args, "qq_csv", None) and report.qq:
        _write_text(args.qq_csv, _csv_lines("q_theoretical,q_empirical",
                                            report.qq))
    if getattr(args, "var_csv", None):
        rows = [[r["eps"], r["var"], r["var_stderr"],
                 r.get("reference_var", float("nan"))]
                for r in report.per_eps]
        _write_text(args.var_csv,
                    _csv_lines("eps,var,var_stderr,reference", rows))
    return EXIT_OK


def cmd_mc_clt(args) -> int:
    from .mc import run_clt

    return _emit_mc(run_clt(_mc_config(args, "clt")), args)


def cmd_mc_l2(args) -> int:
    from .mc import run_l2

    return _emit_mc(run_l2(_mc_config(args, "l2")), args)


def cmd_chaos_check(args) -> int:
    from .mc import run_chaos_check

    return _emit_mc(run_chaos_check(_mc_config(args, "chaos-check")), args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="siltlab",
        description="numerical laboratory for renormalized self-intersection "
                    "local times of fractional Brownian motion",
    )
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS thread hint (or SILT_THREADS); wall-clock only")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True, seed=True, out_required=False,
               out_help="output JSON path (default: stdout)"):
        sp.add_argument("--config", help="JSON config file (flags override)")
        sp.add_argument("--H", type=parse_hurst, default=as_hurst(0.5),
                        help='Hurst parameter, decimal or exact "p/q"')
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--out", required=out_required, default=None,
                        help=out_help)
        if grid:
            sp.add_argument("--n", type=int, default=1024)
            sp.add_argument("--T", type=float, default=1.0)
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fbm", help="sample an fBm path to CSV/binary")
    common(sp, out_required=True, out_help="path data file to write")
    sp.add_argument("--method", choices=["circulant", "cholesky"],
                    default="circulant")
    sp.add_argument("--format", choices=["csv", "binary"], default="csv")
    sp.add_argument("--meta", default=None, help="optional JSON metadata path")
    sp.set_defaults(func=cmd_fbm)

    sp = sub.add_parser("estimate", help="I_eps of a stored path")
    common(sp, grid=False, seed=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--T", type=float, default=1.0,
                    help="horizon of the stored path")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--override", action="store_true")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("classify", help="regime of (H, d)")
    common(sp, grid=False, seed=False)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("constants", help="quadrature constants")
    common(sp, grid=False, seed=False)
    sp.add_argument("--what", required=True,
                    choices=["chd", "xi", "sigma2", "chaos-var",
                             "chaos-limit"])
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--csv", default=None, help="also write a constants CSV")
    sp.set_defaults(func=cmd_constants)

    def mc_common(sp):
        common(sp)
        sp.add_argument("--eps", type=float, nargs="+", required=True)
        sp.add_argument("--paths", type=int, default=1000)
        sp.add_argument("--override", action="store_true")
        sp.add_argument("--qq-csv", default=None)
        sp.add_argument("--var-csv", default=None)

    sp = sub.add_parser("mc-clt", help="CLT fluctuation experiment")
    mc_common(sp)
    sp.set_defaults(func=cmd_mc_clt)

    sp = sub.add_parser("mc-l2", help="L2 regime eps-ladder experiment")
    mc_common(sp)
    sp.set_defaults(func=cmd_mc_l2)

    sp = sub.add_parser("chaos-check", help="chaos projection cross-check")
    mc_common(sp)
    sp.add_argument("--m-orders", type=int, nargs="+", default=[1, 2, 3, 4])
    sp.set_defaults(func=cmd_chaos_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # defaults per subcommand, for config-file merging
    sub_defaults = {}
    for action in parser._subparsers._group_actions:
        for name, sp in action.choices.items():
            if name == args.command:
                sub_defaults = {a.dest: a.default for a in sp._actions}
    _set_threads(args)
    try:
        args = _apply_config_file(args, sub_defaults)
        if isinstance(getattr(args, "H", None), str):
            args.H = parse_hurst(args.H)
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except SiltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, TypeError) as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
