"""Catalogue of oscillatory coefficient fields.

All 1D fields are expressed in the fast variable ``s = x / eps``, so the
microstructure period is 1 and domain sizes are measured by the ratio
``delta = eta / eps``.  A field is the map ``s -> a(s)`` together with its
positivity bounds and, when available, exact reference quantities: the
harmonic mean of ``a`` over one period and the primitive of ``b = 1/a``.

2D fields are scalar (isotropic tensors ``a * I``) in the two fast
variables, optionally carrying a reference homogenized tensor.

User-defined fields use the same dataclasses; only the catalogue lookups
are restricted to the named entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CatalogueError

TWO_PI = 2.0 * np.pi
SQRT2 = np.sqrt(2.0)

CATALOGUE_1D = ("a1", "a2", "a3")
CATALOGUE_2D = ("case2", "case4")


@dataclass(frozen=True)
class Coefficient1D:
    """A 1D oscillatory coefficient a(s) with 0 < lam <= a <= Lam."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lambda_bound: float
    Lambda_bound: float
    period_kind: str  # "periodic-1" or "quasi-periodic"
    exact_harmonic_mean: Optional[float] = None
    # s -> int_0^s 1/a(t) dt, vectorized
    exact_b_primitive: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))

    def b(self, s):
        """Reciprocal field b(s) = 1/a(s)."""
        return 1.0 / self(s)


@dataclass(frozen=True)
class Coefficient2D:
    """A scalar 2D field a(x1, x2); the conductivity tensor is a * I."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    period_kind: str
    reference_tensor: Optional[tuple[float, float]] = None
    reference_provenance: str = ""

    def __call__(self, x1, x2):
        return self.fn(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


def _sign_pos(x: np.ndarray) -> np.ndarray:
    # sign with the convention sign(0) := +1 for deterministic evaluation
    return np.where(x >= 0.0, 1.0, -1.0)


def _a1(s):
    return 1.0 / (1.1 + np.cos(TWO_PI * s))


def _a1_b_primitive(s):
    return 1.1 * s + np.sin(TWO_PI * s) / TWO_PI


def _a2(s):
    return 1.0 / (2.2 + np.cos(TWO_PI * s) + np.cos(SQRT2 * TWO_PI * s))


def _a2_b_primitive(s):
    return (2.2 * s + np.sin(TWO_PI * s) / TWO_PI
            + np.sin(SQRT2 * TWO_PI * s) / (SQRT2 * TWO_PI))


def _a3(s):
    return 1.0 / (2.0 + _sign_pos(np.cos(TWO_PI * s)))


def _a3_b_primitive(s):
    # b = 2 + square wave; the square wave's primitive is the triangle wave
    # rising on [0,1/4], falling on [1/4,3/4], rising again on [3/4,1].
    s = np.asarray(s, dtype=float)
    whole = np.floor(s)
    f = s - whole
    tri = np.where(f <= 0.25, f, np.where(f <= 0.75, 0.5 - f, f - 1.0))
    return 2.0 * s + tri


_ONE_D = {
    "a1": Coefficient1D(
        name="a1",
        fn=_a1,
        lambda_bound=1.0 / 2.1,
        Lambda_bound=10.0,
        period_kind="periodic-1",
        exact_harmonic_mean=10.0 / 11.0,
        exact_b_primitive=_a1_b_primitive,
    ),
    "a2": Coefficient1D(
        name="a2",
        fn=_a2,
        lambda_bound=1.0 / 4.2,
        Lambda_bound=5.0,
        period_kind="quasi-periodic",
        exact_harmonic_mean=5.0 / 11.0,
        exact_b_primitive=_a2_b_primitive,
    ),
    "a3": Coefficient1D(
        name="a3",
        fn=_a3,
        lambda_bound=1.0 / 3.0,
        Lambda_bound=1.0,
        period_kind="periodic-1",
        exact_harmonic_mean=0.5,
        exact_b_primitive=_a3_b_primitive,
    ),
}


def _case2(x1, x2):
    u = 2.0 + 1.5 * np.sin(TWO_PI * x1)
    v = 2.0 + 1.5 * np.sin(TWO_PI * x2)
    w = 2.0 + 1.5 * np.cos(TWO_PI * x1)
    return u / v + v / w


def _case4(x1, x2):
    return 1.0 / (1.1 + np.cos(TWO_PI * (x1 + SQRT2 * x2)))


_TWO_D = {
    "case2": Coefficient2D(
        name="case2",
        fn=_case2,
        period_kind="periodic-1",
        reference_tensor=(2.34348520086, 2.87329450077),
        reference_provenance="unit-cell solve, 1024^2 grid",
    ),
    "case4": Coefficient2D(
        name="case4",
        fn=_case4,
        period_kind="quasi-periodic",
        reference_tensor=(1.75643523765, 1.34396605902),
        reference_provenance="arithmetic average of rho over delta in [13,16]",
    ),
}


def catalogue_1d(name: str) -> Coefficient1D:
    """Look up a named 1D field (a1, a2 or a3)."""
    try:
        return _ONE_D[name]
    except KeyError:
        raise CatalogueError(
            f"unknown 1D coefficient {name!r}; valid entries: {', '.join(CATALOGUE_1D)}"
        ) from None


def catalogue_2d(name: str) -> Coefficient2D:
    """Look up a named 2D field (case2 or case4)."""
    try:
        return _TWO_D[name]
    except KeyError:
        raise CatalogueError(
            f"unknown 2D coefficient {name!r}; valid entries: {', '.join(CATALOGUE_2D)}"
        ) from None
