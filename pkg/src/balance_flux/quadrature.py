"""
Quadrature plumbing shared by the exact oracles, the traces and the
weak-form residual.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec

from .exceptions import QuadratureAccuracyError

logger = logging.getLogger(__name__)

# quad_vec subdivision budget per call
MAX_INTERVALS = 2000


@dataclass(frozen=True)
class QuadratureResult:
    """Value of an integral together with its estimated absolute error"""

    value: np.ndarray
    error: float


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]"""
    if order < 1:
        raise ValueError(f"Quadrature order must be >= 1, got {order}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_on_interval(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [a, b]"""
    nodes, weights = gauss_legendre(order)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * nodes, half * weights


def split_points(a: float, b: float, breakpoints: Optional[Iterable[float]]) -> List[float]:
    """Sorted unique breakpoints strictly inside (a, b), bracketed by a and b"""
    inner = sorted({float(p) for p in (breakpoints or ()) if a < p < b})
    return [a, *inner, b]


def stable_sum(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Componentwise correctly rounded sum, independent of evaluation order"""
    if not parts:
        raise ValueError("stable_sum needs at least one term")
    stacked = np.asarray(parts, dtype=float)
    flat = stacked.reshape(stacked.shape[0], -1)
    summed = np.array([math.fsum(flat[:, k]) for k in range(flat.shape[1])])
    return summed.reshape(stacked.shape[1:])


def integrate(
    func: Callable[[float], np.ndarray],
    a: float,
    b: float,
    tol: float,
    breakpoints: Optional[Iterable[float]] = None,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integration of a vector-valued function.

    The integrand only has to be smooth between breakpoints; discontinuities
    and kinks must be listed there. Raises QuadratureAccuracyError when the
    estimated error stays above ``tol``.
    """
    if b < a:
        raise ValueError(f"Integration limits must be increasing, got [{a}, {b}]")
    if b == a:
        return QuadratureResult(np.zeros_like(np.asarray(func(a), dtype=float)), 0.0)

    points = split_points(a, b, breakpoints)[1:-1]
    value, error, info = quad_vec(
        func,
        a,
        b,
        epsabs=tol,
        epsrel=0.0,
        norm="max",
        limit=MAX_INTERVALS,
        quadrature="gk15",
        points=points or None,
        full_output=True,
    )
    error = float(error)
    if not info.success or error > tol:
        raise QuadratureAccuracyError(
            f"Quadrature on [{a}, {b}] reached error {error:.3e} > tol {tol:.3e} "
            f"after {info.intervals.shape[0]} intervals",
            achieved=error,
        )
    return QuadratureResult(np.asarray(value, dtype=float), error)


def piecewise_gauss_nodes(lo, hi, breaks: np.ndarray, order: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss nodes on [lo, hi] cut at ``breaks`` (clipped), broadcast over leading axes.

    ``breaks`` has shape (..., k); returns nodes and weights of shape
    (..., (k + 1) * panels * order). Clipping keeps the piece count fixed, so
    the rule stays a dense tensor; pieces of zero length carry zero weight.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    clipped = np.clip(breaks, lo[..., None], hi[..., None])
    cap = clipped.shape[:-1] + (1,)
    ends = [np.broadcast_to(lo[..., None], cap), clipped, np.broadcast_to(hi[..., None], cap)]
    edges = np.sort(np.concatenate(ends, axis=-1), axis=-1)
    a, b = edges[..., :-1], edges[..., 1:]
    fractions = np.linspace(0.0, 1.0, panels + 1)
    pa = a[..., :, None] + (b - a)[..., :, None] * fractions[:-1]
    pb = a[..., :, None] + (b - a)[..., :, None] * fractions[1:]
    ref_nodes, ref_weights = gauss_legendre(order)
    half = 0.5 * (pb - pa)
    nodes = (0.5 * (pa + pb))[..., None] + half[..., None] * ref_nodes
    weights = half[..., None] * ref_weights
    shape = nodes.shape[:-3] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)
