"""Sweep orchestration, curve storage, weighted averaging, and rate fits.

A sweep evaluates an expensive per-window quantity (a 1D average or a 2D
cell solve) on a grid of window sizes and stores the resulting curves.
Averaging against a scaled kernel then consumes stored curves, so one
sweep serves every kernel and every evaluation point; rate estimation
fits a line through (log delta, log |value|).

Per-window tasks are pure functions of the configuration, so they can be
dispatched to a process pool; results are reassembled in window order,
making the output independent of worker count and scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cell2d, resonance1d
from .coefficients import Coefficient1D, Coefficient2D
from .errors import CoverageError, InsufficientDataError, ValidationError
from .kernels import Kernel, flat_kernel, kernel_eval_scaled, parse_descriptor

FLOAT_FORMAT = "%.17g"

# canonical CSV column order per sweep mode
COLUMNS_1D = ("delta", "rho", "error", "smoothed", "smoothed_error")
COLUMNS_2D = ("delta", "rho11", "rho22", "rho12", "err11", "err22", "iterations")


@dataclass(frozen=True)
class ErrorCurve:
    """Ordered (delta, value) samples of one swept quantity."""

    deltas: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.ndim != 1 or d.shape != v.shape:
            raise ValidationError("curve deltas and values must be 1D and equal length")
        if d.size >= 2 and np.any(np.diff(d) <= 0):
            raise ValidationError("curve deltas must be strictly increasing")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "values", v)

    def window(self, lo: float, hi: float) -> "ErrorCurve":
        mask = (self.deltas >= lo) & (self.deltas <= hi)
        return ErrorCurve(self.deltas[mask], self.values[mask], dict(self.meta))


@dataclass(frozen=True)
class SweepConfig:
    """Window grid and solver parameters for one sweep."""

    delta_min: float
    delta_max: float
    delta_step: float
    kernel: Optional[str] = None  # descriptor, e.g. "flat" or "poly:p=1,q=1"
    n_base: int = 32
    n_trap: int = 4096
    tol: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        if self.delta_min < 1.0:
            raise ValidationError(f"delta_min must be >= 1, got {self.delta_min}")
        if self.delta_step <= 0.0:
            raise ValidationError(f"delta_step must be positive, got {self.delta_step}")
        if self.delta_max < self.delta_min:
            raise ValidationError("delta_max must be >= delta_min")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.tol <= 0.0:
            raise ValidationError(f"tol must be positive, got {self.tol}")

    def deltas(self) -> np.ndarray:
        n_steps = int(math.floor((self.delta_max - self.delta_min) / self.delta_step + 1e-9))
        return self.delta_min + self.delta_step * np.arange(n_steps + 1)


def weighted_average(curve: ErrorCurve, kernel: Kernel, delta: float) -> float:
    """Trapezoid quadrature of K_delta * curve over the window [delta, 2*delta].

    The stored samples must cover the window with spacing at most
    0.05 * max(1, delta / 10); no extrapolation is attempted.
    """
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    edge = 1e-9 * max(1.0, delta)
    lo, hi = delta, 2.0 * delta
    mask = (curve.deltas >= lo - edge) & (curve.deltas <= hi + edge)
    t = curve.deltas[mask]
    allowed = 0.05 * max(1.0, delta / 10.0)
    if (t.size < 2 or t[0] > lo + allowed + edge or t[-1] < hi - allowed - edge
            or np.max(np.diff(t)) > allowed + edge):
        raise CoverageError(
            f"curve must cover [{lo:g}, {hi:g}] with spacing <= {allowed:g} "
            f"to average at delta={delta:g}")
    vals = curve.values[mask]
    return float(np.trapezoid(kernel_eval_scaled(kernel, delta, t) * vals, t))


def average_reference(curve: ErrorCurve, lo: float, hi: float) -> float:
    """Arithmetic mean of curve samples with lo <= delta <= hi."""
    sub = curve.window(lo, hi)
    if sub.deltas.size == 0:
        raise CoverageError(f"no samples in [{lo:g}, {hi:g}]")
    return float(np.mean(sub.values))


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log delta, log |value|)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int
    n_zeros_excluded: int


def fit_rate(curve: ErrorCurve, delta_lo: float, delta_hi: float) -> RateFit:
    """Log-log rate fit over [delta_lo, delta_hi]; zero values are excluded."""
    mask = (curve.deltas >= delta_lo) & (curve.deltas <= delta_hi)
    d = curve.deltas[mask]
    v = curve.values[mask]
    nonzero = v != 0.0
    n_zeros = int(np.sum(~nonzero))
    d, v = d[nonzero], v[nonzero]
    if d.size < 5:
        raise InsufficientDataError(
            f"need at least 5 nonzero samples in [{delta_lo:g}, {delta_hi:g}], "
            f"got {d.size} ({n_zeros} zeros excluded)")
    x = np.log(d)
    y = np.log(np.abs(v))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r_sq,
                   n_points=int(d.size), n_zeros_excluded=n_zeros)


def local_maxima(curve: ErrorCurve) -> ErrorCurve:
    """Subcurve of interior local maxima of |value| (the oscillation envelope)."""
    mag = np.abs(curve.values)
    if mag.size < 3:
        return ErrorCurve(curve.deltas[:0], curve.values[:0], dict(curve.meta))
    peak = np.zeros(mag.size, dtype=bool)
    peak[1:-1] = (mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:]) & (mag[1:-1] > 0)
    return ErrorCurve(curve.deltas[peak], curve.values[peak], dict(curve.meta))


def fit_envelope_rate(curve: ErrorCurve, delta_lo: float, delta_hi: float) -> RateFit:
    """Rate fit restricted to the local maxima of |value|."""
    return fit_rate(local_maxima(curve), delta_lo, delta_hi)


# ---------------------------------------------------------------------------
# sweep execution

def _task_1d(args):
    coeff, kernel, n_trap, delta = args
    res = resonance1d.rho_eps(coeff, delta, quad_points=n_trap)
    smoothed = resonance1d.smoothed_average(coeff, delta, kernel, n_trap_base=n_trap)
    return (res.rho, res.error, smoothed, smoothed - res.abar)


def _task_2d(args):
    coeff, n_base, tol, abar, delta = args
    tensor, iters = cell2d.rho_estimate(coeff, delta, delta, n_base, tol)
    return (tensor.a11, tensor.a22, tensor.a12,
            tensor.a11 - abar[0], tensor.a22 - abar[1], float(iters))


def _task_tubular(args):
    coeff, n_base, tol, abar, delta = args
    tensor, iters = cell2d.rho_estimate(coeff, delta, 1.0, n_base, tol)
    return (tensor.a11, tensor.a22, tensor.a12,
            tensor.a11 - abar[0], tensor.a22 - abar[1], float(iters))


def _resolve_reference(coeff: Coefficient2D, tol: float) -> tuple[float, float]:
    if coeff.reference_tensor is not None:
        return coeff.reference_tensor
    ref = cell2d.reference_tensor(coeff, tol=tol)
    return (ref.a11, ref.a22)


def _run_tasks(task, payloads, workers: int):
    if workers <= 1:
        return [task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(payloads) // (8 * workers))
        return list(pool.map(task, payloads, chunksize=chunk))


def run_sweep(config: SweepConfig, coeff, mode: str) -> dict[str, ErrorCurve]:
    """Evaluate a sweep and return one curve per output column.

    mode is "1d" (naive + smoothed averages of a 1D coefficient), "2d"
    (square cells) or "tubular" (x2 extent pinned to one period).  The
    result maps column names to curves sharing the same delta grid.
    """
    deltas = config.deltas()
    if mode == "1d":
        if not isinstance(coeff, Coefficient1D):
            raise ValidationError("mode '1d' requires a Coefficient1D")
        kernel = parse_descriptor(config.kernel) if config.kernel else flat_kernel()
        payloads = [(coeff, kernel, config.n_trap, d) for d in deltas]
        rows = _run_tasks(_task_1d, payloads, config.workers)
        names = COLUMNS_1D[1:]
        kernel_desc = kernel.describe()
    elif mode in ("2d", "tubular"):
        if not isinstance(coeff, Coefficient2D):
            raise ValidationError(f"mode {mode!r} requires a Coefficient2D")
        abar = _resolve_reference(coeff, config.tol)
        payloads = [(coeff, config.n_base, config.tol, abar, d) for d in deltas]
        task = _task_2d if mode == "2d" else _task_tubular
        rows = _run_tasks(task, payloads, config.workers)
        names = COLUMNS_2D[1:]
        kernel_desc = config.kernel or ""
    else:
        raise ValidationError(f"unknown sweep mode {mode!r}")

    table = np.asarray(rows, dtype=float)
    meta = {
        "mode": mode,
        "coeff": getattr(coeff, "name", "custom"),
        "kernel": kernel_desc,
        "delta_min": config.delta_min,
        "delta_max": config.delta_max,
        "delta_step": config.delta_step,
        "n_base": config.n_base,
        "n_trap": config.n_trap,
        "tol": config.tol,
        "rounding": "half-up",
    }
    return {name: ErrorCurve(deltas, table[:, k], {**meta, "column": name})
            for k, name in enumerate(names)}


# ---------------------------------------------------------------------------
# CSV persistence: '#'-prefixed metadata, one header row, %.17g floats

def write_csv(target, columns: dict[str, np.ndarray], meta: dict) -> None:
    """Write named columns with a metadata header; floats keep 17 digits."""
    own = isinstance(target, (str, bytes))
    handle = open(target, "w", newline="\n") if own else target
    try:
        for key, value in meta.items():
            handle.write(f"# {key} = {value}\n")
        names = list(columns)
        handle.write(",".join(names) + "\n")
        arrays = [np.asarray(columns[n], dtype=float) for n in names]
        for i in range(arrays[0].size):
            handle.write(",".join(FLOAT_FORMAT % a[i] for a in arrays) + "\n")
    finally:
        if own:
            handle.close()


def curves_to_columns(curves: dict[str, ErrorCurve], order) -> dict[str, np.ndarray]:
    """Assemble sweep curves into CSV columns in canonical order."""
    first = next(iter(curves.values()))
    cols = {"delta": first.deltas}
    for name in order:
        if name != "delta":
            cols[name] = curves[name].values
    return cols


def read_csv(source) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a CSV produced by write_csv; returns (meta, columns)."""
    own = isinstance(source, (str, bytes))
    handle = open(source, "r") if own else source
    try:
        meta = {}
        header = None
        rows = []
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    finally:
        if own:
            handle.close()
    if header is None:
        raise ValidationError("CSV has no header row")
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return meta, {name: data[:, k] for k, name in enumerate(header)}


def curve_from_csv(source, value_column: str) -> ErrorCurve:
    """Load one column of a stored sweep as a curve over its delta grid."""
    meta, cols = read_csv(source)
    if "delta" not in cols:
        raise ValidationError("CSV has no 'delta' column")
    if value_column not in cols:
        raise ValidationError(
            f"CSV has no column {value_column!r}; available: "
            + ", ".join(n for n in cols if n != "delta"))
    return ErrorCurve(cols["delta"], cols[value_column],
                      {**meta, "column": value_column})
