"""Averaging kernels on [1,2] with vanishing negative moments.

A kernel K is admissible when it integrates to 1 over [1,2] and its
negative moments vanish: int_1^2 K(x) x^(-r) dx = 0 for r = 1..p.  The
polynomial family takes the form

    K(x) = (x-1)^(q+1) (x-2)^(q+1) * sum_j a_j x^j,   j = 0..p,

so K and its first q derivatives vanish at both endpoints; the
coefficients a_j solve the (p+1)x(p+1) moment system.  Two further
variants are catalogued: the flat kernel K = 1 (a plain arithmetic
average, no endpoint vanishing) and the exponential bump
K = C exp(1/((x-1)(x-2))), which is smooth to all orders at the
endpoints and has unit mass by choice of C.

Scaling: kernel_scaled(K, eta, x) = K(x/eta)/eta has support [eta, 2*eta]
and unit mass for every eta > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import ConditioningError, ValidationError

MAX_ORDER = 8  # conditioning guard on p and q
_COND_LIMIT = 1e12
_ENDPOINT_GUARD = 1e-12  # exponential variant returns 0 this close to 1 or 2

# 64-node Gauss-Legendre rule mapped to [1,2]; integrands here are analytic
# on the closed interval (x >= 1 keeps negative powers tame), so this is
# accurate to near machine precision.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)
_GL_X = 1.5 + 0.5 * _GL_X
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class Kernel:
    """An averaging kernel supported on [1,2].

    variant is one of "flat", "polynomial", "exponential".  For the
    polynomial family, coeffs holds (a_0, ..., a_p).  p is the number of
    vanishing negative moments (0 for flat and exponential); q is the
    endpoint smoothness order (-1 for flat, math.inf for exponential).
    """

    variant: str
    p: int = 0
    q: float = -1
    coeffs: Optional[tuple[float, ...]] = None
    norm_constant: Optional[float] = None

    def __call__(self, x):
        return kernel_eval(self, x)

    def scaled(self, eta: float, x):
        return kernel_eval_scaled(self, eta, x)

    def describe(self) -> str:
        if self.variant == "polynomial":
            return f"poly:p={self.p},q={int(self.q)}"
        return {"flat": "flat", "exponential": "exp"}[self.variant]


FLAT = Kernel(variant="flat", p=0, q=-1)


def flat_kernel() -> Kernel:
    """The constant kernel K = 1 on [1,2]."""
    return FLAT


def _weighted_moment(q: int, power: int) -> float:
    # int_1^2 (x-1)^(q+1) (x-2)^(q+1) x^power dx by Gauss-Legendre
    w = (_GL_X - 1.0) ** (q + 1) * (_GL_X - 2.0) ** (q + 1)
    return float(np.sum(_GL_W * w * _GL_X ** power))


def build_polynomial_kernel(p: int, q: int) -> Kernel:
    """Solve the moment system for the polynomial kernel of orders (p, q)."""
    if not (isinstance(p, (int, np.integer)) and isinstance(q, (int, np.integer))):
        raise ValidationError("p and q must be integers")
    if p < 0 or q < 0:
        raise ValidationError(f"p and q must be nonnegative, got p={p}, q={q}")
    if p > MAX_ORDER or q > MAX_ORDER:
        raise ValidationError(
            f"p and q are capped at {MAX_ORDER} for conditioning, got p={p}, q={q}"
        )
    # rows r = 0..p: moment against x^{-r}; columns j = 0..p: basis x^j
    m = np.empty((p + 1, p + 1))
    for r in range(p + 1):
        for j in range(p + 1):
            m[r, j] = _weighted_moment(q, j - r)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise ConditioningError(
            f"moment system for (p={p}, q={q}) has condition estimate {cond:.3e}"
        )
    rhs = np.zeros(p + 1)
    rhs[0] = 1.0
    coeffs = np.linalg.solve(m, rhs)
    return Kernel(variant="polynomial", p=int(p), q=int(q), coeffs=tuple(coeffs))


def build_exponential_kernel() -> Kernel:
    """The smooth bump C exp(1/((x-1)(x-2))), normalized to unit mass."""
    mass, err = quad(lambda x: math.exp(1.0 / ((x - 1.0) * (x - 2.0))),
                     1.0, 2.0, epsabs=1e-16, epsrel=1e-13, limit=200)
    # integrand is bounded by e^-4 and smooth; quad reaches ~1e-13 relative
    return Kernel(variant="exponential", p=0, q=math.inf, norm_constant=1.0 / mass)


def kernel_eval(kernel: Kernel, x) -> np.ndarray:
    """Evaluate K(x); identically 0 outside [1,2]."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    inside = (x >= 1.0) & (x <= 2.0)
    out = np.zeros_like(x)
    if kernel.variant == "flat":
        out[inside] = 1.0
    elif kernel.variant == "polynomial":
        xi = x[inside]
        poly = np.polynomial.polynomial.polyval(xi, np.asarray(kernel.coeffs))
        out[inside] = (xi - 1.0) ** (kernel.q + 1) * (xi - 2.0) ** (kernel.q + 1) * poly
    elif kernel.variant == "exponential":
        xi = x[inside]
        interior = (xi > 1.0 + _ENDPOINT_GUARD) & (xi < 2.0 - _ENDPOINT_GUARD)
        vals = np.zeros_like(xi)
        xh = xi[interior]
        vals[interior] = kernel.norm_constant * np.exp(1.0 / ((xh - 1.0) * (xh - 2.0)))
        out[inside] = vals
    else:
        raise ValidationError(f"unknown kernel variant {kernel.variant!r}")
    if scalar:
        return float(out[0])
    return out


def kernel_eval_scaled(kernel: Kernel, eta: float, x) -> np.ndarray:
    """Evaluate K_eta(x) = K(x/eta)/eta, supported on [eta, 2*eta]."""
    if eta <= 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    return kernel_eval(kernel, np.asarray(x, dtype=float) / eta) / eta


@dataclass(frozen=True)
class MomentCheck:
    """One row of a moment verification table."""

    r: int
    moment: float
    target: Optional[float]  # None above the kernel's moment order
    residual: Optional[float]


def _moment(kernel: Kernel, r: int) -> float:
    if kernel.variant == "exponential":
        val, _ = quad(lambda x: kernel_eval(kernel, x) / x ** r,
                      1.0, 2.0, epsabs=1e-15, epsrel=1e-13, limit=200)
        return float(val)
    vals = kernel_eval(kernel, _GL_X)
    return float(np.sum(_GL_W * vals * _GL_X ** (-r)))


def verify_moments(kernel: Kernel, r_max: int) -> list[MomentCheck]:
    """Moments int K x^(-r) for r = 0..r_max against their targets.

    Targets are 1 for r = 0 and 0 for 1 <= r <= p; moments above the
    kernel's order carry no target and are reported raw.
    """
    if r_max < 0:
        raise ValidationError(f"r_max must be nonnegative, got {r_max}")
    checks = []
    for r in range(r_max + 1):
        moment = _moment(kernel, r)
        if r == 0:
            checks.append(MomentCheck(r, moment, 1.0, abs(moment - 1.0)))
        elif r <= kernel.p:
            checks.append(MomentCheck(r, moment, 0.0, abs(moment)))
        else:
            checks.append(MomentCheck(r, moment, None, None))
    return checks


def parse_descriptor(text: str) -> Kernel:
    """Build a kernel from a CLI descriptor: flat, exp, or poly:p=<i>,q=<i>."""
    text = text.strip()
    if text == "flat":
        return flat_kernel()
    if text == "exp":
        return build_exponential_kernel()
    if text.startswith("poly:"):
        params = {}
        for part in text[len("poly:"):].split(","):
            key, _, value = part.partition("=")
            key = key.strip()
            if key not in ("p", "q") or not value.strip().lstrip("+-").isdigit():
                raise ValidationError(f"bad kernel descriptor {text!r}")
            params[key] = int(value)
        if set(params) != {"p", "q"}:
            raise ValidationError(f"kernel descriptor {text!r} must set both p and q")
        return build_polynomial_kernel(params["p"], params["q"])
    raise ValidationError(
        f"unknown kernel descriptor {text!r}; expected flat, exp, or poly:p=<int>,q=<int>"
    )
