"""Command-line front end.

Subcommands mirror the library: kernel build/verify, sweep1d, sweep2d,
tubular, average, rates, demo-lemma.  Every run emits CSV (stdout or
--output) with a '#'-prefixed metadata header recording the effective
parameters, so identical invocations produce byte-identical files.

Parameters resolve in three layers: built-in defaults, then a --config
file of ``key = value`` lines, then explicit flags.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import resonance1d, sweep
from .coefficients import catalogue_1d, catalogue_2d
from .errors import CellresError, ConfigError
from .kernels import parse_descriptor, verify_moments
from .resonance1d import DEMO_FUNCTIONS


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "coeff": str,
    "kernel": str,
    "delta_min": float,
    "delta_max": float,
    "delta_step": float,
    "delta": float,
    "ntrap": int,
    "nbase": int,
    "tol": float,
    "workers": int,
    "rmax": int,
    "r": int,
    "f": str,
    "lo": float,
    "hi": float,
    "column": str,
    "input": str,
    "output": str,
    "envelope": _parse_bool,
}


def load_config_file(path: str) -> dict:
    """Parse a ``key = value`` file; unknown keys and malformed lines fail."""
    values = {}
    with open(path, "r") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONVERTERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONVERTERS[key](value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key!r}") from None
    return values


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults, config file values, and explicit flags (flags win)."""
    config = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in config:
        if key not in defaults:
            raise ConfigError(f"key {key!r} does not apply to this subcommand")
    merged = dict(defaults)
    merged.update(config)
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    missing = [k for k, v in merged.items() if v is None]
    if missing:
        raise ConfigError("missing required parameter(s): " + ", ".join(sorted(missing)))
    return merged


def _emit(args, columns: dict, meta: dict) -> None:
    target = getattr(args, "output", None)
    if target:
        sweep.write_csv(target, columns, meta)
    else:
        sweep.write_csv(sys.stdout, columns, meta)


def _add_common(parser, *, config=True, output=True):
    if config:
        parser.add_argument("--config", help="key = value parameter file")
    if output:
        parser.add_argument("--output", help="write CSV here instead of stdout")


def _cmd_kernel_build(args) -> int:
    params = _effective(args, {"kernel": "flat"})
    kernel = parse_descriptor(params["kernel"])
    meta = {"subcommand": "kernel-build", "kernel": params["kernel"],
            "variant": kernel.variant, "p": kernel.p, "q": kernel.q}
    if kernel.norm_constant is not None:
        meta["norm_constant"] = sweep.FLOAT_FORMAT % kernel.norm_constant
    coeffs = kernel.coeffs or ()
    columns = {"j": np.arange(len(coeffs), dtype=float),
               "coefficient": np.asarray(coeffs, dtype=float)}
    _emit(args, columns, meta)
    return 0


def _cmd_kernel_verify(args) -> int:
    params = _effective(args, {"kernel": "flat", "rmax": 4})
    kernel = parse_descriptor(params["kernel"])
    checks = verify_moments(kernel, params["rmax"])
    meta = {"subcommand": "kernel-verify", "kernel": params["kernel"],
            "rmax": params["rmax"]}
    target = getattr(args, "output", None)
    handle = open(target, "w", newline="\n") if target else sys.stdout
    try:
        for key, value in meta.items():
            handle.write(f"# {key} = {value}\n")
        handle.write("r,moment,target,residual\n")
        for chk in checks:
            tgt = "" if chk.target is None else sweep.FLOAT_FORMAT % chk.target
            res = "" if chk.residual is None else sweep.FLOAT_FORMAT % chk.residual
            handle.write(f"{chk.r},{sweep.FLOAT_FORMAT % chk.moment},{tgt},{res}\n")
    finally:
        if target:
            handle.close()
    return 0


_SWEEP1D_DEFAULTS = {"coeff": None, "delta_min": 1.0, "delta_max": 100.0,
                     "delta_step": 0.05, "kernel": "flat", "ntrap": 4096,
                     "workers": 1}


def _cmd_sweep1d(args) -> int:
    params = _effective(args, _SWEEP1D_DEFAULTS)
    coeff = catalogue_1d(params["coeff"])
    config = sweep.SweepConfig(delta_min=params["delta_min"], delta_max=params["delta_max"],
                               delta_step=params["delta_step"], kernel=params["kernel"],
                               n_trap=params["ntrap"], workers=params["workers"])
    curves = sweep.run_sweep(config, coeff, mode="1d")
    columns = sweep.curves_to_columns(curves, sweep.COLUMNS_1D)
    meta = {"subcommand": "sweep1d", **next(iter(curves.values())).meta,
            "workers": params["workers"]}
    meta.pop("column", None)
    _emit(args, columns, meta)
    return 0


_SWEEP2D_DEFAULTS = {"coeff": None, "delta_min": 1.0, "delta_max": 16.0,
                     "delta_step": 0.05, "nbase": 32, "tol": 1e-10, "workers": 1}


def _cmd_sweep2d(args, mode="2d") -> int:
    params = _effective(args, _SWEEP2D_DEFAULTS)
    coeff = catalogue_2d(params["coeff"])
    config = sweep.SweepConfig(delta_min=params["delta_min"], delta_max=params["delta_max"],
                               delta_step=params["delta_step"], n_base=params["nbase"],
                               tol=params["tol"], workers=params["workers"])
    curves = sweep.run_sweep(config, coeff, mode=mode)
    columns = sweep.curves_to_columns(curves, sweep.COLUMNS_2D)
    meta = {"subcommand": "sweep2d" if mode == "2d" else "tubular",
            **next(iter(curves.values())).meta, "workers": params["workers"]}
    meta.pop("column", None)
    _emit(args, columns, meta)
    return 0


def _cmd_average(args) -> int:
    params = _effective(args, {"input": None, "kernel": "flat", "delta": None})
    kernel = parse_descriptor(params["kernel"])
    meta_in, cols = sweep.read_csv(params["input"])
    if "delta" not in cols:
        raise ConfigError(f"{params['input']}: no 'delta' column")
    rho_columns = [n for n in cols if n.startswith("rho")]
    if not rho_columns:
        raise ConfigError(f"{params['input']}: no rho columns to average")
    out_cols, out_vals = [], []
    for name in rho_columns:
        curve = sweep.ErrorCurve(cols["delta"], cols[name], {"column": name})
        out_cols.append(name)
        out_vals.append(sweep.weighted_average(curve, kernel, params["delta"]))
    meta = {"subcommand": "average", "input": params["input"],
            "kernel": params["kernel"], "delta": params["delta"],
            "source_coeff": meta_in.get("coeff", "")}
    target = getattr(args, "output", None)
    handle = open(target, "w", newline="\n") if target else sys.stdout
    try:
        for key, value in meta.items():
            handle.write(f"# {key} = {value}\n")
        handle.write("column,delta,smoothed\n")
        for name, val in zip(out_cols, out_vals):
            handle.write(f"{name},{sweep.FLOAT_FORMAT % params['delta']},"
                         f"{sweep.FLOAT_FORMAT % val}\n")
    finally:
        if target:
            handle.close()
    return 0


def _cmd_rates(args) -> int:
    params = _effective(args, {"input": None, "lo": 10.0, "hi": 100.0,
                               "column": "", "envelope": False})
    _, cols = sweep.read_csv(params["input"])
    if "delta" not in cols:
        raise ConfigError(f"{params['input']}: no 'delta' column")
    names = [params["column"]] if params["column"] else [n for n in cols if n != "delta"]
    meta = {"subcommand": "rates", "input": params["input"], "lo": params["lo"],
            "hi": params["hi"], "envelope": params["envelope"]}
    target = getattr(args, "output", None)
    handle = open(target, "w", newline="\n") if target else sys.stdout
    try:
        for key, value in meta.items():
            handle.write(f"# {key} = {value}\n")
        handle.write("column,slope,intercept,r_squared,n_points,n_zeros_excluded\n")
        for name in names:
            if name not in cols:
                raise ConfigError(f"{params['input']}: no column {name!r}")
            curve = sweep.ErrorCurve(cols["delta"], cols[name], {"column": name})
            fit = (sweep.fit_envelope_rate if params["envelope"] else sweep.fit_rate)(
                curve, params["lo"], params["hi"])
            handle.write(",".join([
                name,
                sweep.FLOAT_FORMAT % fit.slope,
                sweep.FLOAT_FORMAT % fit.intercept,
                sweep.FLOAT_FORMAT % fit.r_squared,
                str(fit.n_points),
                str(fit.n_zeros_excluded),
            ]) + "\n")
    finally:
        if target:
            handle.close()
    return 0


_DEMO_DEFAULTS = {"f": "offset-sin", "r": 2, "kernel": "flat",
                  "delta_min": 10.0, "delta_max": 100.0, "delta_step": 0.05,
                  "ntrap": 4096}


def _cmd_demo_lemma(args) -> int:
    params = _effective(args, _DEMO_DEFAULTS)
    if params["f"] not in DEMO_FUNCTIONS:
        raise ConfigError(f"unknown demo function {params['f']!r}; "
                          f"choose from {', '.join(sorted(DEMO_FUNCTIONS))}")
    f = DEMO_FUNCTIONS[params["f"]]
    kernel = parse_descriptor(params["kernel"])
    config = sweep.SweepConfig(delta_min=params["delta_min"], delta_max=params["delta_max"],
                               delta_step=params["delta_step"])
    deltas = config.deltas()
    raw = deltas ** (-float(params["r"])) * f(deltas)
    upsilon = np.array([
        resonance1d.upsilon_r(f, params["r"], d, kernel, n_trap_base=params["ntrap"])
        for d in deltas])
    meta = {"subcommand": "demo-lemma", "f": params["f"], "r": params["r"],
            "kernel": params["kernel"], "delta_min": params["delta_min"],
            "delta_max": params["delta_max"], "delta_step": params["delta_step"],
            "ntrap": params["ntrap"]}
    _emit(args, {"delta": deltas, "raw": raw, "upsilon": upsilon}, meta)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellres",
        description="Resonance-error sweeps and kernel averaging for cell problems")
    sub = parser.add_subparsers(dest="command", required=True)

    kernel = sub.add_parser("kernel", help="construct or check averaging kernels")
    ksub = kernel.add_subparsers(dest="kernel_command", required=True)

    kb = ksub.add_parser("build", help="emit kernel construction data as CSV")
    kb.add_argument("--kernel", help="flat | exp | poly:p=<int>,q=<int>")
    _add_common(kb)
    kb.set_defaults(func=_cmd_kernel_build)

    kv = ksub.add_parser("verify", help="moment residual table as CSV")
    kv.add_argument("--kernel", help="flat | exp | poly:p=<int>,q=<int>")
    kv.add_argument("--rmax", type=int, help="largest negative-moment order to report")
    _add_common(kv)
    kv.set_defaults(func=_cmd_kernel_verify)

    s1 = sub.add_parser("sweep1d", help="1D naive and smoothed averages over delta")
    s1.add_argument("--coeff", help="a1 | a2 | a3")
    s1.add_argument("--delta-min", dest="delta_min", type=float)
    s1.add_argument("--delta-max", dest="delta_max", type=float)
    s1.add_argument("--delta-step", dest="delta_step", type=float)
    s1.add_argument("--kernel")
    s1.add_argument("--ntrap", type=int)
    s1.add_argument("--workers", type=int)
    _add_common(s1)
    s1.set_defaults(func=_cmd_sweep1d)

    for name, help_text in (("sweep2d", "2D square-cell sweep"),
                            ("tubular", "2D tubular sweep (x2 extent fixed at 1)")):
        s2 = sub.add_parser(name, help=help_text)
        s2.add_argument("--coeff", help="case2 | case4")
        s2.add_argument("--delta-min", dest="delta_min", type=float)
        s2.add_argument("--delta-max", dest="delta_max", type=float)
        s2.add_argument("--delta-step", dest="delta_step", type=float)
        s2.add_argument("--nbase", type=int)
        s2.add_argument("--tol", type=float)
        s2.add_argument("--workers", type=int)
        _add_common(s2)
        s2.set_defaults(func=_cmd_sweep2d, mode=("2d" if name == "sweep2d" else "tubular"))

    av = sub.add_parser("average", help="kernel-average stored rho curves at one delta")
    av.add_argument("--input", help="CSV produced by a sweep subcommand")
    av.add_argument("--kernel")
    av.add_argument("--delta", type=float)
    _add_common(av)
    av.set_defaults(func=_cmd_average)

    rt = sub.add_parser("rates", help="log-log rate fit of stored curves")
    rt.add_argument("--input")
    rt.add_argument("--lo", type=float)
    rt.add_argument("--hi", type=float)
    rt.add_argument("--column", help="fit a single column (default: all)")
    rt.add_argument("--envelope", action="store_const", const=True, default=None,
                    help="fit local maxima of |value| instead of all samples")
    _add_common(rt)
    rt.set_defaults(func=_cmd_rates)

    dl = sub.add_parser("demo-lemma", help="kernel-weighted decay probe vs raw decay")
    dl.add_argument("--f", help="sin | offset-sin | square")
    dl.add_argument("--r", type=int)
    dl.add_argument("--kernel")
    dl.add_argument("--delta-min", dest="delta_min", type=float)
    dl.add_argument("--delta-max", dest="delta_max", type=float)
    dl.add_argument("--delta-step", dest="delta_step", type=float)
    dl.add_argument("--ntrap", type=int)
    _add_common(dl)
    dl.set_defaults(func=_cmd_demo_lemma)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "mode", None) == "tubular":
            return args.func(args, mode="tubular")
        return args.func(args)
    except CellresError as exc:
        print(f"cellres: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cellres: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
