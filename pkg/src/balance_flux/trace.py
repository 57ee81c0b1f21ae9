"""
Flux traces across foliation leaves and box sections, their Lipschitz
estimates and their moduli of continuity in time.

A trace is the outward flux h = int_{t1}^{t2} int_Gamma f(u)·nu dS dt, so
positive values mean mass leaving the enclosed domain.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from .exceptions import PreconditionError, QuadratureAccuracyError
from .geometry import BoundaryFoliation, Box, Domain, Face, axis_face
from .quadrature import QuadratureResult, stable_sum

logger = logging.getLogger(__name__)

# doubling levels kept in a LipschitzReport history
HISTORY_LEVELS = 3


@runtime_checkable
class FluxSampler(Protocol):
    """Anything that can report face fluxes and masses of one solution"""

    provenance: str

    def face_flux(self, face: Face, t1: float, t2: float, tol: float) -> QuadratureResult:
        ...

    def mass(self, domain: Domain, t: float, tol: float) -> QuadratureResult:
        ...

    def state_range(self) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def state_bound(self) -> float:
        ...

    def flux_bound(self, face: Face) -> np.ndarray:
        ...


@dataclass(frozen=True)
class FluxTrace:
    value: np.ndarray
    y: float
    t1: float
    t2: float
    provenance: str
    error_estimate: float

    def __post_init__(self):
        if self.t2 < self.t1:
            raise PreconditionError(f"Trace interval [{self.t1}, {self.t2}] is inverted")
        if not self.error_estimate >= 0.0:
            raise PreconditionError(f"Error estimate must be >= 0, got {self.error_estimate}")


@dataclass(frozen=True)
class TraceProfile:
    """Traces at ordered parameters y_0 <= ... <= y_K sharing (t1, t2)"""

    samples: Tuple[FluxTrace, ...]
    t1: float
    t2: float
    tol: float

    def __post_init__(self):
        ys = [s.y for s in self.samples]
        if any(b < a for a, b in zip(ys[:-1], ys[1:])):
            raise PreconditionError(f"Profile parameters must be sorted, got {ys}")
        if any(s.t1 != self.t1 or s.t2 != self.t2 for s in self.samples):
            raise PreconditionError("All traces of a profile must share (t1, t2)")

    @property
    def ys(self) -> np.ndarray:
        return np.array([s.y for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        """Trace values, shape (K + 1, D)"""
        return np.array([s.value for s in self.samples])

    def subsample(self, stride: int) -> "TraceProfile":
        return TraceProfile(self.samples[::stride], self.t1, self.t2, self.tol)


@dataclass(frozen=True)
class LipschitzReport:
    estimate: np.ndarray
    history: Tuple[Tuple[int, np.ndarray], ...]
    analytic_bound: Optional[np.ndarray] = None

    @property
    def value(self) -> float:
        return float(np.max(self.estimate)) if self.estimate.size else 0.0

    def growth(self) -> List[float]:
        """Ratio of successive history maxima (K doubling)"""
        maxima = [float(np.max(h)) for _, h in self.history]
        out = []
        for a, b in zip(maxima[:-1], maxima[1:]):
            out.append(b / a if a > 0.0 else (1.0 if b == 0.0 else np.inf))
        return out


@dataclass(frozen=True)
class TimeIncrement:
    dt: float
    dh: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> np.ndarray:
        if self.dt == 0.0:
            return np.zeros_like(self.dh)
        return np.abs(self.dh) / self.dt


def flux_trace(
    sampler: FluxSampler, boundary: Sequence[Face], t1: float, t2: float, tol: float, y: float = 0.0
) -> FluxTrace:
    """Net outward flux through every face of a closed boundary"""
    if t2 < t1:
        raise PreconditionError(f"Need t1 <= t2, got [{t1}, {t2}]")
    if not boundary:
        raise PreconditionError("Boundary has no faces")
    face_tol = tol / len(boundary)
    parts, error = [], 0.0
    for face in boundary:
        result = sampler.face_flux(face, t1, t2, face_tol)
        parts.append(np.asarray(result.value, dtype=float))
        error += result.error
    if error > tol:
        raise QuadratureAccuracyError(f"Trace error {error:.3e} exceeds tol {tol:.3e}", achieved=error)
    return FluxTrace(stable_sum(parts), float(y), float(t1), float(t2), sampler.provenance, error)


def trace_profile(
    sampler: FluxSampler, foliation: BoundaryFoliation, t1: float, t2: float, K: int, tol: float
) -> TraceProfile:
    """Traces on K + 1 equispaced leaves, labelled by the normal coordinate"""
    if K < 2:
        raise PreconditionError(f"Profile needs K >= 2, got {K}")
    samples = []
    for rho in foliation.sample_offsets(K):
        trace = flux_trace(sampler, foliation.boundary_at(float(rho)), t1, t2, tol, y=float(rho))
        logger.debug(f"Leaf rho={rho:.6g}: h={trace.value.tolist()} (err {trace.error_estimate:.2e})")
        samples.append(trace)
    return TraceProfile(tuple(samples), float(t1), float(t2), tol)


def face_flux_profile(
    sampler: FluxSampler,
    box: Box,
    axis: int,
    positions: Sequence[float],
    t1: float,
    t2: float,
    tol: float,
) -> TraceProfile:
    """F^j(x_j; t1, t2) through +e_j oriented sections of ``box``"""
    if not 0 <= axis < box.n:
        raise PreconditionError(f"Axis {axis} out of range for a box in R^{box.n}")
    samples = []
    for p in positions:
        result = sampler.face_flux(axis_face(box, axis, p, 1), t1, t2, tol)
        samples.append(FluxTrace(np.asarray(result.value, float), float(p), t1, t2, sampler.provenance, result.error))
    return TraceProfile(tuple(samples), float(t1), float(t2), tol)


def _first_differences(profile: TraceProfile) -> np.ndarray:
    ys, values = profile.ys, profile.values
    gaps = np.diff(ys)
    keep = gaps > 0.0
    if not np.any(keep):
        return np.zeros(values.shape[1])
    slopes = np.abs(np.diff(values, axis=0))[keep] / gaps[keep][:, None]
    return slopes.max(axis=0)


def estimate_lipschitz(profile: TraceProfile, analytic_bound: Optional[np.ndarray] = None) -> LipschitzReport:
    """Max first difference per component, with the estimate on coarser subsamples.

    The history lists (K, L) for every stride 2^m that keeps at least three
    samples, coarsest first.
    """
    if len(profile.samples) < 3:
        raise PreconditionError(f"Lipschitz estimate needs >= 3 samples, got {len(profile.samples)}")
    K = len(profile.samples) - 1
    history = []
    stride = 1
    while K % stride == 0 and K // stride >= 2:
        history.append((K // stride, _first_differences(profile.subsample(stride))))
        stride *= 2
    history.reverse()
    estimate = _first_differences(profile)
    if not np.all(np.isfinite(estimate)):
        raise PreconditionError("Lipschitz estimate is not finite")
    return LipschitzReport(estimate, tuple(history), analytic_bound)


def analytic_lipschitz_bound(sampler: FluxSampler, foliation: BoundaryFoliation) -> np.ndarray:
    """osc(u) * max leaf measure, a bound on |dh/drho|"""
    lo, hi = sampler.state_range()
    lo_rho, hi_rho = foliation.offset_range
    largest = max(sum(f.measure for f in foliation.boundary_at(rho)) for rho in (lo_rho, hi_rho))
    return (np.asarray(hi) - np.asarray(lo)) * largest


def time_modulus(
    sampler: FluxSampler, boundary: Sequence[Face], t1: float, t2_list: Sequence[float], tol: float
) -> List[TimeIncrement]:
    """h(t1, t2_{k+1}) - h(t1, t2_k) for successive end times.

    The increments are evaluated as h(t2_k, t2_{k+1}), which equals the
    difference by time additivity and avoids cancellation.
    """
    times = [float(t) for t in t2_list]
    if any(b < a for a, b in zip(times[:-1], times[1:])):
        raise PreconditionError(f"End times must be sorted, got {times}")
    if times and times[0] < t1:
        raise PreconditionError(f"End times must not precede t1={t1}")
    increments = []
    for a, b in zip(times[:-1], times[1:]):
        dh = flux_trace(sampler, boundary, a, b, tol).value
        increments.append(TimeIncrement(b - a, dh))
    return increments


def time_continuity_bound(sampler: FluxSampler, boundary: Sequence[Face]) -> np.ndarray:
    """sum over faces of sup |f_i(u)·nu| * |face|"""
    return stable_sum([np.asarray(sampler.flux_bound(face)) * face.measure for face in boundary])
