"""
Domains, boundary faces and one-parameter boundary foliations.

Faces are points (n = 1) or curves (n = 2) parametrized on an interval, so
surface integrals reduce to 1-D integrals in the face parameter.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import GeometryError, PreconditionError
from .quadrature import gauss_on_interval

logger = logging.getLogger(__name__)

ON_FACE_TOL = 1e-12
BOX_INFLATION = "box-inflation"
CONCENTRIC_SPHERE = "concentric-sphere"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box prod [a_i, b_i]"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    allow_degenerate: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(a) for a in self.lower))
        object.__setattr__(self, "upper", tuple(float(b) for b in self.upper))
        if len(self.lower) != len(self.upper) or len(self.lower) not in (1, 2):
            raise GeometryError(f"Box needs matching bounds in 1 or 2 dimensions: {self}")
        for a, b in zip(self.lower, self.upper):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise GeometryError(f"Box bounds must be finite: {self}")
            if b < a or (b == a and not self.allow_degenerate):
                raise GeometryError(f"Box requires a_i < b_i, got [{a}, {b}]")

    @classmethod
    def degenerate(cls, lower: Sequence[float], upper: Sequence[float]) -> "Box":
        """Box allowed to have zero extent along some axes"""
        return cls(tuple(lower), tuple(upper), allow_degenerate=True)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    @property
    def perimeter(self) -> float:
        """Surface measure of the boundary; two unit-weight points in 1-D"""
        if self.n == 1:
            return 2.0
        return 2.0 * float(np.sum(self.extent))

    def corners(self) -> np.ndarray:
        grids = np.meshgrid(*[(a, b) for a, b in zip(self.lower, self.upper)], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=-1)

    def inflate(self, offset: float) -> "Box":
        """Minkowski sum with the box [-offset, offset]^n (shrinks for offset < 0)"""
        lower = tuple(a - offset for a in self.lower)
        upper = tuple(b + offset for b in self.upper)
        if any(hi <= lo for lo, hi in zip(lower, upper)):
            raise GeometryError(f"Inflating {self} by {offset} leaves an empty box")
        return Box(lower, upper)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= np.array(self.lower) - tol) & (points <= np.array(self.upper) + tol), axis=-1)

    def boundary_faces(self) -> List["AxisFace"]:
        faces = []
        for j in range(self.n):
            for position, orientation in ((self.lower[j], -1), (self.upper[j], 1)):
                faces.append(axis_face(self, j, position, orientation))
        return faces


@dataclass(frozen=True)
class Disk:
    """Disk in the plane"""

    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise GeometryError("Disk center must have 2 coordinates")
        if not self.radius > 0.0:
            raise GeometryError(f"Disk radius must be positive, got {self.radius}")

    n = 2

    @property
    def measure(self) -> float:
        return math.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def inflate(self, offset: float) -> "Disk":
        if self.radius + offset <= 0.0:
            raise GeometryError(f"Inflating {self} by {offset} leaves an empty disk")
        return Disk(self.center, self.radius + offset)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.linalg.norm(points - np.array(self.center), axis=-1) <= self.radius + tol

    def boundary_faces(self) -> List["SphereFace"]:
        return [SphereFace(self.center, self.radius, (0.0, 2.0 * math.pi))]


Domain = Union[Box, Disk]


class Face(ABC):
    """Oriented piece of a domain boundary, parametrized by tau"""

    n: int

    @property
    @abstractmethod
    def param_range(self) -> Tuple[float, float]:
        ...

    @property
    @abstractmethod
    def jacobian(self) -> float:
        """Surface measure per unit parameter"""

    @abstractmethod
    def point(self, tau) -> np.ndarray:
        """Points on the face; shape tau.shape + (n,)"""

    @abstractmethod
    def normal(self, tau) -> np.ndarray:
        """Unit normals in the face orientation; shape tau.shape + (n,)"""

    @abstractmethod
    def contains(self, point: np.ndarray, tol: float = ON_FACE_TOL) -> bool:
        ...

    @abstractmethod
    def reversed(self) -> "Face":
        ...

    @property
    def measure(self) -> float:
        lo, hi = self.param_range
        return (hi - lo) * self.jacobian if self.n > 1 else 1.0


@dataclass(frozen=True)
class AxisFace(Face):
    """Face {x_axis = position} x cross_section with normal orientation * e_axis"""

    axis: int
    position: float
    cross_section: Tuple[Tuple[float, float], ...]
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cross_section", tuple((float(a), float(b)) for a, b in self.cross_section))
        if self.orientation not in (1, -1):
            raise GeometryError(f"Face orientation must be +1 or -1, got {self.orientation}")
        if not 0 <= self.axis < len(self.cross_section) + 1:
            raise GeometryError(f"Axis {self.axis} out of range for a face in R^{len(self.cross_section) + 1}")
        for a, b in self.cross_section:
            if b < a:
                raise GeometryError(f"Face cross-section [{a}, {b}] is inverted")

    @property
    def n(self) -> int:
        return len(self.cross_section) + 1

    @property
    def param_range(self) -> Tuple[float, float]:
        return self.cross_section[0] if self.cross_section else (0.0, 0.0)

    @property
    def jacobian(self) -> float:
        return 1.0

    @property
    def unit_normal(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[self.axis] = float(self.orientation)
        return e

    def point(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        out = np.empty(tau.shape + (self.n,))
        out[..., self.axis] = self.position
        if self.n == 2:
            out[..., 1 - self.axis] = tau
        return out

    def normal(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return np.broadcast_to(self.unit_normal, tau.shape + (self.n,))

    def contains(self, point, tol=ON_FACE_TOL) -> bool:
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.shape != (self.n,) or abs(point[self.axis] - self.position) > tol:
            return False
        others = [k for k in range(self.n) if k != self.axis]
        return all(a - tol <= point[k] <= b + tol for k, (a, b) in zip(others, self.cross_section))

    def reversed(self) -> "AxisFace":
        return AxisFace(self.axis, self.position, self.cross_section, -self.orientation)


@dataclass(frozen=True)
class SphereFace(Face):
    """Circular arc of a circle, angles measured from the x-axis"""

    center: Tuple[float, float]
    radius: float
    angles: Tuple[float, float]
    outward: bool = True

    n = 2

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0.0:
            raise GeometryError(f"Arc radius must be positive, got {self.radius}")
        lo, hi = self.angles
        if not lo <= hi <= lo + 2.0 * math.pi + 1e-15:
            raise GeometryError(f"Arc angles {self.angles} must satisfy lo <= hi <= lo + 2pi")

    @property
    def param_range(self) -> Tuple[float, float]:
        return self.angles

    @property
    def jacobian(self) -> float:
        return self.radius

    def point(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        radial = np.stack([np.cos(tau), np.sin(tau)], axis=-1)
        return np.array(self.center) + self.radius * radial

    def normal(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        sign = 1.0 if self.outward else -1.0
        return sign * np.stack([np.cos(tau), np.sin(tau)], axis=-1)

    def contains(self, point, tol=ON_FACE_TOL) -> bool:
        offset = np.asarray(point, dtype=float).reshape(-1) - np.array(self.center)
        if offset.shape != (2,) or abs(np.hypot(*offset) - self.radius) > tol * max(1.0, self.radius):
            return False
        lo, hi = self.angles
        theta = (math.atan2(offset[1], offset[0]) - lo) % (2.0 * math.pi)
        return theta <= hi - lo + tol or theta >= 2.0 * math.pi - tol

    def reversed(self) -> "SphereFace":
        return SphereFace(self.center, self.radius, self.angles, not self.outward)


def axis_face(box: Box, axis: int, position: float, orientation: int = 1) -> AxisFace:
    """Section of ``box`` at x_axis = position"""
    cross = tuple((box.lower[k], box.upper[k]) for k in range(box.n) if k != axis)
    return AxisFace(axis, float(position), cross, orientation)


def outward_normal(face: Face, point) -> np.ndarray:
    """Unit normal of ``face`` at a point lying on it"""
    point = np.asarray(point, dtype=float).reshape(-1)
    if not face.contains(point):
        raise PreconditionError(f"Point {point.tolist()} does not lie on {face}")
    if isinstance(face, SphereFace):
        tau = math.atan2(point[1] - face.center[1], point[0] - face.center[0])
        return face.normal(np.array(tau))
    return face.unit_normal.copy()


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Quadrature nodes on a face with surface-measure weights"""

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    order: int


def surface_quadrature(face: Face, order: int) -> SurfaceQuadrature:
    """Gauss rule on a face; equal-angle composite Gauss on arcs"""
    if order < 1:
        raise PreconditionError(f"Quadrature order must be >= 1, got {order}")
    lo, hi = face.param_range
    if face.n == 1:
        taus, weights = np.zeros(1), np.ones(1)
    elif isinstance(face, SphereFace):
        panels = max(1, math.ceil((hi - lo) / (0.5 * math.pi) - 1e-12))
        cuts = np.linspace(lo, hi, panels + 1)
        rules = [gauss_on_interval(a, b, order) for a, b in zip(cuts[:-1], cuts[1:])]
        taus = np.concatenate([r[0] for r in rules])
        weights = np.concatenate([r[1] for r in rules]) * face.jacobian
    else:
        taus, weights = gauss_on_interval(lo, hi, order)
        weights = weights * face.jacobian
    return SurfaceQuadrature(face.point(taus), weights, face.normal(taus), order)


def boundary_faces(domain: Domain) -> List[Face]:
    return list(domain.boundary_faces())


def boundary_measure(domain: Domain) -> float:
    return float(sum(face.measure for face in domain.boundary_faces()))


@dataclass(frozen=True)
class BoundaryFoliation:
    """Nested boundaries Gamma_y of inflated boxes or concentric circles.

    ``parameters`` are the dimensionless leaf labels y in [-delta, 1 - delta];
    leaf y sits at normal coordinate rho = y * width from the base boundary.
    """

    kind: str
    base: Domain
    delta: float
    width: float
    parameters: Tuple[float, ...]
    quadrature_order: int = 8

    @property
    def offsets(self) -> Tuple[float, ...]:
        return tuple(y * self.width for y in self.parameters)

    @property
    def offset_range(self) -> Tuple[float, float]:
        return (-self.delta * self.width, (1.0 - self.delta) * self.width)

    def domain_at(self, rho: float) -> Domain:
        lo, hi = self.offset_range
        if not lo - 1e-12 <= rho <= hi + 1e-12:
            raise PreconditionError(f"Normal coordinate {rho} outside foliation range [{lo}, {hi}]")
        return self.base.inflate(rho)

    def boundary_at(self, rho: float) -> List[Face]:
        return boundary_faces(self.domain_at(rho))

    def leaf_quadrature(self, rho: float) -> List[SurfaceQuadrature]:
        return [surface_quadrature(face, self.quadrature_order) for face in self.boundary_at(rho)]

    def sample_offsets(self, K: int) -> np.ndarray:
        """K + 1 equispaced normal coordinates spanning the foliation"""
        lo, hi = self.offset_range
        return np.linspace(lo, hi, K + 1)


def foliate(base: Domain, delta: float, width: float, count: int, quadrature_order: int = 8) -> BoundaryFoliation:
    """Foliation of a tubular shell around the boundary of ``base``"""
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not width > 0.0:
        raise PreconditionError(f"width must be positive, got {width}")
    if count < 2:
        raise PreconditionError(f"count must be >= 2, got {count}")
    kind = BOX_INFLATION if isinstance(base, Box) else CONCENTRIC_SPHERE
    try:
        base.inflate(-delta * width)
    except GeometryError as e:
        raise GeometryError(f"Innermost leaf of the foliation is empty: {e}") from e
    parameters = tuple(float(y) for y in np.linspace(-delta, 1.0 - delta, count))
    logger.debug(f"Foliation {kind} of {base}: {count} leaves, width {width}")
    return BoundaryFoliation(kind, base, float(delta), float(width), parameters, quadrature_order)


@dataclass(frozen=True)
class FoliationAudit:
    """Closure and nesting of the leaves, checked on quadrature nodes"""

    closure_error: float
    nesting_violations: Tuple[float, ...]

    @property
    def nested(self) -> bool:
        return not self.nesting_violations


def audit_foliation(foliation: BoundaryFoliation) -> FoliationAudit:
    """Leaf weights must add up to the leaf perimeter, and every leaf must lie
    strictly between its neighbours"""
    closure = 0.0
    violations = []
    offsets = sorted(foliation.offsets)
    for k, rho in enumerate(offsets):
        rules = foliation.leaf_quadrature(rho)
        total = math.fsum(float(w) for rule in rules for w in rule.weights)
        perimeter = foliation.domain_at(rho).perimeter
        closure = max(closure, abs(total - perimeter) / max(1.0, perimeter))
        nodes = np.concatenate([rule.nodes.reshape(-1, foliation.base.n) for rule in rules])
        if k + 1 < len(offsets):
            gap = offsets[k + 1] - rho
            if gap <= 0.0 or not np.all(foliation.domain_at(offsets[k + 1]).contains(nodes, tol=-0.5 * gap)):
                violations.append(rho)
        if k > 0:
            gap = rho - offsets[k - 1]
            if gap <= 0.0 or np.any(foliation.domain_at(offsets[k - 1]).contains(nodes, tol=0.5 * gap)):
                violations.append(rho)
    return FoliationAudit(closure, tuple(sorted(set(violations))))
