"""
Exact planar weak solutions u(x, t) = w((x·nu - x0) / t) built from a single
Riemann fan, with their masses, time-integrated fluxes and weak-form
residuals.

All integrals are split at the places where the solution (or its time
integral) stops being smooth, so the quadratures below only ever see smooth
pieces.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import PreconditionError, QuadratureAccuracyError
from .geometry import AxisFace, Box, Disk, Domain, Face, SphereFace
from .quadrature import QuadratureResult, integrate, piecewise_gauss_nodes, stable_sum
from .systems import SystemModel, WaveStructure, unit_direction

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
WEAK_FORM_ORDER = 8
BUMP_POWER = 4


@dataclass(frozen=True)
class WaveEventList:
    """Times in (t1, t2) at which a wave feature crosses a fixed point"""

    point: Tuple[float, ...]
    times: Tuple[float, ...]


@dataclass(frozen=True)
class PlanarWeakSolution:
    """u(x, t) = w((x·normal - offset) / t) for the Riemann data (u_l, u_r)"""

    model: SystemModel
    normal: Tuple[float, ...]
    offset: float
    u_l: np.ndarray
    u_r: np.ndarray
    entropy: bool = True
    structure: WaveStructure = field(init=False, repr=False)

    def __post_init__(self):
        normal = unit_direction(self.normal, self.model.n)
        object.__setattr__(self, "normal", tuple(normal))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "u_l", self.model.state(self.u_l))
        object.__setattr__(self, "u_r", self.model.state(self.u_r))
        structure = self.model.riemann_structure(self.u_l, self.u_r, normal, entropy=self.entropy)
        object.__setattr__(self, "structure", structure)

    @property
    def nu(self) -> np.ndarray:
        return np.array(self.normal)

    @property
    def speeds(self) -> Tuple[float, ...]:
        return self.structure.feature_speeds()

    def coordinate(self, x) -> np.ndarray:
        """Signed distance s = x·nu - x0 to the initial interface"""
        x = np.asarray(x, dtype=float)
        return x @ self.nu - self.offset

    def sample_s(self, s, t: float) -> np.ndarray:
        """Solution as a function of the normal coordinate; shape s.shape + (D,)"""
        s = np.asarray(s, dtype=float)
        if t < 0.0:
            raise PreconditionError(f"Time must be >= 0, got {t}")
        if t == 0.0:
            return np.where((s <= 0.0)[..., None], self.u_l, self.u_r)
        return self.structure.sample(s / t)

    def state_range(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.structure.value_range()

    def state_bound(self) -> float:
        """C_Q = sup |u(x, t)|"""
        _, hi = self.structure.value_range(lambda w: np.array([np.linalg.norm(w)]))
        return float(hi[0])

    def flux_bound(self, normal: Optional[Sequence[float]] = None) -> np.ndarray:
        """sup |f_i(u)·normal| per component; sup |f_i(u)| when normal is None"""
        if normal is None:
            func = lambda w: np.linalg.norm(self.model.flux(w), axis=-1)
        else:
            nu = np.asarray(normal, dtype=float)
            func = lambda w: np.abs(self.model.directional_flux(w, nu))
        _, hi = self.structure.value_range(func)
        return hi


def planar_solution(model: SystemModel, u_l, u_r, normal=None, offset: float = 0.0, entropy: bool = True) -> PlanarWeakSolution:
    if normal is None:
        normal = (1.0,) + (0.0,) * (model.n - 1)
    return PlanarWeakSolution(model, tuple(normal), offset, np.asarray(u_l, float), np.asarray(u_r, float), entropy)


def sample(sol: PlanarWeakSolution, x, t: float) -> np.ndarray:
    """u(x, t); at t = 0 the initial data, with u_l on the interface itself"""
    return sol.sample_s(sol.coordinate(x), t)


def wave_events(sol: PlanarWeakSolution, x, t1: float, t2: float) -> WaveEventList:
    point = np.asarray(x, dtype=float).reshape(-1)
    s0 = float(sol.coordinate(point))
    times = {s0 / speed for speed in sol.speeds if speed != 0.0} if s0 != 0.0 else set()
    return WaveEventList(tuple(point), tuple(sorted(t for t in times if t1 < t < t2)))


def _fan_at(sol: PlanarWeakSolution, xi: float) -> bool:
    return any(head < xi <= tail for head, tail, _ in sol.structure.fan_intervals())


def _flux_matrix_in_time(sol: PlanarWeakSolution, x, t1: float, t2: float, tol: float) -> QuadratureResult:
    """int_{t1}^{t2} f(u(x, t)) dt as a D x n matrix, cut at the wave events of x"""
    model = sol.model
    zero = np.zeros((model.D, model.n))
    if t2 <= t1:
        return QuadratureResult(zero, 0.0)
    s0 = float(sol.coordinate(np.asarray(x, dtype=float).reshape(-1)))
    if s0 == 0.0:
        w = sol.structure.sample(np.array([0.0]))[0]
        return QuadratureResult(model.flux(w) * (t2 - t1), 0.0)

    cuts = [t1, *wave_events(sol, x, t1, t2).times, t2]

    parts, error = [zero], 0.0
    n_pieces = len(cuts) - 1
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        if _fan_at(sol, s0 / mid):
            piece = integrate(
                lambda t: model.flux(sol.structure.sample(np.array([s0 / t]))[0]), a, b, tol / n_pieces
            )
            parts.append(piece.value)
            error += piece.error
        else:
            w = sol.sample_s(np.array([s0]), mid)[0]
            parts.append(model.flux(w) * (b - a))
    return QuadratureResult(stable_sum(parts), error)


def integrated_flux_density(sol: PlanarWeakSolution, x, t1: float, t2: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """g(x; t1, t2) = int_{t1}^{t2} f(u(x, t)) dt, a D x n matrix"""
    if not 0.0 <= t1 <= t2:
        raise PreconditionError(f"Need 0 <= t1 <= t2, got [{t1}, {t2}]")
    return _flux_matrix_in_time(sol, x, t1, t2, tol).value


def instantaneous_flux(sol: PlanarWeakSolution, x, normal, t: float) -> np.ndarray:
    """Pointwise integrand f(u(x, t))·normal"""
    return sol.model.directional_flux(sample(sol, x, t), np.asarray(normal, dtype=float))


def _face_kinks(sol: PlanarWeakSolution, face: Face, t1: float, t2: float) -> List[float]:
    """Face parameters where s(x(tau)) hits a place the time integral has a kink"""
    levels = {0.0}
    for speed in sol.speeds:
        levels.update((speed * t1, speed * t2))
    nu = sol.nu
    lo, hi = face.param_range
    kinks = []
    if isinstance(face, AxisFace):
        other = 1 - face.axis
        if nu[other] == 0.0:
            return []
        base = nu[face.axis] * face.position - sol.offset
        kinks = [(level - base) / nu[other] for level in levels]
    elif isinstance(face, SphereFace):
        phi = math.atan2(nu[1], nu[0])
        s_center = float(np.dot(nu, face.center)) - sol.offset
        for level in levels:
            q = (level - s_center) / face.radius
            if -1.0 <= q <= 1.0:
                angle = math.acos(q)
                for theta in (phi + angle, phi - angle):
                    # bring into [lo, lo + 2 pi)
                    kinks.append(lo + (theta - lo) % (2.0 * math.pi))
    return sorted(k for k in kinks if lo < k < hi)


def _face_flux(sol: PlanarWeakSolution, face: Face, t1: float, t2: float, tol: float) -> QuadratureResult:
    if face.n != sol.model.n:
        raise PreconditionError(f"Face dimension {face.n} does not match model dimension {sol.model.n}")
    if not 0.0 <= t1 <= t2:
        raise PreconditionError(f"Need 0 <= t1 <= t2, got [{t1}, {t2}]")
    D = sol.model.D
    if t2 == t1:
        return QuadratureResult(np.zeros(D), 0.0)

    time_tol = 0.5 * tol / max(1.0, face.measure)
    if face.n == 1:
        point = face.point(np.array(0.0))
        g = _flux_matrix_in_time(sol, point, t1, t2, time_tol)
        return QuadratureResult(g.value @ face.normal(np.array(0.0)), g.error)

    inner_error = [0.0]

    def integrand(tau: float) -> np.ndarray:
        point = face.point(np.array(tau))
        g = _flux_matrix_in_time(sol, point, t1, t2, time_tol)
        inner_error[0] = max(inner_error[0], g.error)
        return (g.value @ face.normal(np.array(tau))) * face.jacobian

    lo, hi = face.param_range
    outer = integrate(integrand, lo, hi, 0.5 * tol, breakpoints=_face_kinks(sol, face, t1, t2))
    error = outer.error + inner_error[0] * face.measure
    if error > tol:
        raise QuadratureAccuracyError(f"Face flux error {error:.3e} exceeds tol {tol:.3e}", achieved=error)
    return QuadratureResult(outer.value, error)


def exact_face_flux(sol: PlanarWeakSolution, face: Face, t1: float, t2: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """int_{t1}^{t2} int_face f(u)·nu dS dt"""
    return _face_flux(sol, face, t1, t2, tol).value


def _chord_length(box: Box, nu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Length of {x·nu = sigma} inside a 2-D box"""
    tangent = np.array([-nu[1], nu[0]])
    r_lo = np.full(sigma.shape, -np.inf)
    r_hi = np.full(sigma.shape, np.inf)
    for j in range(2):
        a = box.lower[j] - sigma * nu[j]
        b = box.upper[j] - sigma * nu[j]
        if tangent[j] != 0.0:
            lo, hi = np.minimum(a, b) / tangent[j], np.maximum(a, b) / tangent[j]
            lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
            r_lo, r_hi = np.maximum(r_lo, lo), np.minimum(r_hi, hi)
        else:
            inside = (a <= 0.0) & (b >= 0.0)
            r_hi = np.where(inside, r_hi, -np.inf)
    return np.maximum(r_hi - r_lo, 0.0)


def _mass_box(sol: PlanarWeakSolution, box: Box, t: float, tol: float) -> QuadratureResult:
    D = sol.model.D
    if box.measure == 0.0:
        return QuadratureResult(np.zeros(D), 0.0)
    nu = sol.nu
    s_corners = box.corners() @ nu - sol.offset
    s_lo, s_hi = float(s_corners.min()), float(s_corners.max())
    fronts = [0.0] if t == 0.0 else [speed * t for speed in sol.speeds]
    breaks = list(s_corners) + fronts

    if box.n == 1:
        length = lambda s: 1.0
    else:
        length = lambda s: float(_chord_length(box, nu, np.array([s + sol.offset]))[0])

    def integrand(s: float) -> np.ndarray:
        return sol.sample_s(np.array([s]), t)[0] * length(s)

    return integrate(integrand, s_lo, s_hi, tol, breakpoints=breaks)


def _mass_disk(sol: PlanarWeakSolution, disk: Disk, t: float, tol: float) -> QuadratureResult:
    nu = sol.nu
    radius = disk.radius
    s_center = float(np.dot(nu, disk.center)) - sol.offset
    fronts = [0.0] if t == 0.0 else [speed * t for speed in sol.speeds]
    breaks = []
    for front in fronts:
        q = (front - s_center) / radius
        if -1.0 < q < 1.0:
            breaks.append(math.asin(q))

    # s = s_center + R sin(phi): chord 2R cos(phi), ds = R cos(phi) dphi
    def integrand(phi: float) -> np.ndarray:
        s = s_center + radius * math.sin(phi)
        return sol.sample_s(np.array([s]), t)[0] * (2.0 * radius * radius * math.cos(phi) ** 2)

    return integrate(integrand, -0.5 * math.pi, 0.5 * math.pi, tol, breakpoints=breaks)


def _mass(sol: PlanarWeakSolution, domain: Domain, t: float, tol: float) -> QuadratureResult:
    if t < 0.0:
        raise PreconditionError(f"Time must be >= 0, got {t}")
    if isinstance(domain, Disk):
        return _mass_disk(sol, domain, t, tol)
    if domain.n != sol.model.n:
        raise PreconditionError(f"Box dimension {domain.n} does not match model dimension {sol.model.n}")
    return _mass_box(sol, domain, t, tol)


def mass(sol: PlanarWeakSolution, domain: Domain, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """int_domain u(x, t) dx"""
    return _mass(sol, domain, t, tol).value


# -- weak form ---------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """Space-time cylinder Q = box x [t1, t2]"""

    box: Box
    t1: float
    t2: float

    def __post_init__(self):
        if not 0.0 <= self.t1 < self.t2:
            raise PreconditionError(f"Cylinder needs 0 <= t1 < t2, got [{self.t1}, {self.t2}]")


def _bump(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(1 - z^2)^p on |z| < 1 and its derivative"""
    inside = np.abs(z) < 1.0
    base = np.where(inside, 1.0 - z * z, 0.0)
    value = base**BUMP_POWER
    slope = np.where(inside, -2.0 * BUMP_POWER * z * base ** (BUMP_POWER - 1), 0.0)
    return value, slope


@dataclass(frozen=True)
class PolynomialBump:
    """phi_i(x, t) = amplitude_i * prod_j b((x_j - c_j)/r_j) * b((t - tc)/rt)"""

    center: Tuple[float, ...]
    radii: Tuple[float, ...]
    t_center: float
    t_radius: float
    amplitude: Tuple[float, ...]

    @property
    def support(self) -> Tuple[Box, float, float]:
        lower = tuple(c - r for c, r in zip(self.center, self.radii))
        upper = tuple(c + r for c, r in zip(self.center, self.radii))
        return Box(lower, upper), self.t_center - self.t_radius, self.t_center + self.t_radius

    def factors(self, x: np.ndarray, t: np.ndarray):
        """Scalar bump B, its time derivative and its gradient"""
        values, slopes = [], []
        for j, (c, r) in enumerate(zip(self.center, self.radii)):
            v, d = _bump((x[..., j] - c) / r)
            values.append(v)
            slopes.append(d / r)
        bt, dbt = _bump((t - self.t_center) / self.t_radius)
        dbt = dbt / self.t_radius
        space = np.prod(values, axis=0)
        grad = []
        for j in range(len(values)):
            others = np.prod([values[k] for k in range(len(values)) if k != j], axis=0) if len(values) > 1 else 1.0
            grad.append(slopes[j] * others * bt)
        return space * bt, space * dbt, np.stack(grad, axis=-1)


def random_bump(rng: np.random.Generator, cylinder: Cylinder, components: int) -> PolynomialBump:
    """Random bump supported strictly inside the cylinder"""
    box = cylinder.box
    center, radii = [], []
    for a, b in zip(box.lower, box.upper):
        r = rng.uniform(0.15, 0.45) * (b - a)
        c = rng.uniform(a + 1.02 * r, b - 1.02 * r)
        center.append(c)
        radii.append(r)
    duration = cylinder.t2 - cylinder.t1
    rt = rng.uniform(0.15, 0.45) * duration
    tc = rng.uniform(cylinder.t1 + 1.02 * rt, cylinder.t2 - 1.02 * rt)
    amplitude = tuple(rng.normal(size=components))
    return PolynomialBump(tuple(center), tuple(radii), tc, rt, amplitude)


def _weak_form_integral(sol: PlanarWeakSolution, phi: PolynomialBump, panels: int) -> float:
    model = sol.model
    nu = sol.nu
    speeds = np.array(sol.speeds) if sol.speeds else np.zeros(0)
    moving = speeds[speeds != 0.0]
    support, ta, tb = phi.support
    corners_s = support.corners() @ nu - sol.offset
    t_breaks = (corners_s[:, None] / moving[None, :]).reshape(-1) if moving.size else np.zeros(0)
    t_nodes, t_weights = piecewise_gauss_nodes(ta, tb, t_breaks[None, :], WEAK_FORM_ORDER, panels)
    t_nodes, t_weights = t_nodes[0], t_weights[0]
    fronts = sol.offset + t_nodes[:, None] * speeds[None, :]  # (T, k) values of x·nu

    lo1, hi1 = support.lower[0], support.upper[0]
    if model.n == 1:
        x1_breaks = fronts / nu[0]
        x1, w1 = piecewise_gauss_nodes(np.full(t_nodes.shape, lo1), np.full(t_nodes.shape, hi1), x1_breaks, WEAK_FORM_ORDER, panels)
        points = x1[..., None]
        tt = np.broadcast_to(t_nodes[:, None], x1.shape)
        weights = w1 * t_weights[:, None]
    else:
        lo2, hi2 = support.lower[1], support.upper[1]
        if nu[1] != 0.0:
            edges = np.array([lo1, hi1])
            x2_breaks = ((fronts[:, :, None] - nu[0] * edges) / nu[1]).reshape(len(t_nodes), -1)
        else:
            x2_breaks = np.zeros((len(t_nodes), 0))
        x2, w2 = piecewise_gauss_nodes(np.full(t_nodes.shape, lo2), np.full(t_nodes.shape, hi2), x2_breaks, WEAK_FORM_ORDER, panels)
        if nu[0] != 0.0:
            x1_breaks = (fronts[:, None, :] - nu[1] * x2[..., None]) / nu[0]
        else:
            x1_breaks = np.zeros(x2.shape + (0,))
        x1, w1 = piecewise_gauss_nodes(np.full(x2.shape, lo1), np.full(x2.shape, hi1), x1_breaks, WEAK_FORM_ORDER, panels)
        x2_full = np.broadcast_to(x2[..., None], x1.shape)
        points = np.stack([x1, x2_full], axis=-1)
        tt = np.broadcast_to(t_nodes[:, None, None], x1.shape)
        weights = w1 * w2[..., None] * t_weights[:, None, None]

    s = points @ nu - sol.offset
    flat_s, flat_t = s.reshape(-1), tt.reshape(-1)
    u = sol.structure.sample(flat_s / flat_t)
    f = model.flux(u)  # (P, D, n)
    _, dt_phi, grad_phi = phi.factors(points.reshape(-1, model.n), flat_t)
    alpha = np.array(phi.amplitude)
    integrand = (u @ alpha) * dt_phi + np.einsum("pdn,d,pn->p", f, alpha, grad_phi)
    return math.fsum(integrand * weights.reshape(-1))


def weak_form_residual(
    sol: PlanarWeakSolution, test_function: PolynomialBump, cylinder: Cylinder, panels: int = 2
) -> float:
    """|int_Q u·phi_t + f(u):grad phi dx dt| with the refined quadrature.

    The residual is evaluated with ``panels`` and ``2 * panels`` Gauss panels
    per smooth piece; the finer value is returned.
    """
    support, ta, tb = test_function.support
    box = cylinder.box
    if support.n != box.n or sol.model.n != box.n:
        raise PreconditionError("Test function, cylinder and solution dimensions differ")
    inside = all(a < lo and hi < b for a, b, lo, hi in zip(box.lower, box.upper, support.lower, support.upper))
    if not (inside and cylinder.t1 < ta and tb < cylinder.t2):
        raise PreconditionError("Test function support must lie strictly inside the cylinder")
    coarse = _weak_form_integral(sol, test_function, panels)
    fine = _weak_form_integral(sol, test_function, 2 * panels)
    logger.debug(f"Weak-form residual {abs(fine):.3e} (refinement change {abs(fine - coarse):.3e})")
    return abs(fine)


class OracleSampler:
    """Flux and mass source backed by an exact planar solution"""

    provenance = "quadrature"

    def __init__(self, solution: PlanarWeakSolution):
        self.solution = solution

    @property
    def model(self) -> SystemModel:
        return self.solution.model

    def face_flux(self, face: Face, t1: float, t2: float, tol: float) -> QuadratureResult:
        return _face_flux(self.solution, face, t1, t2, tol)

    def mass(self, domain: Domain, t: float, tol: float) -> QuadratureResult:
        return _mass(self.solution, domain, t, tol)

    def state_range(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.solution.state_range()

    def state_bound(self) -> float:
        return self.solution.state_bound()

    def flux_bound(self, face: Face) -> np.ndarray:
        if isinstance(face, AxisFace):
            return self.solution.flux_bound(face.unit_normal)
        return self.solution.flux_bound(None)
