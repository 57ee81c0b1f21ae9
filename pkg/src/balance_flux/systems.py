"""
Conservation-law systems u_t + div f(u) = 0.

Each model provides its flux matrix, a characteristic speed bound and the
exact entropy solution of the 1-D Riemann problem for the directional flux
g(w) = f(w)·d. The same Riemann solutions feed the analytic oracles and the
Godunov fluxes of the finite-volume solver.
"""

import difflib
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Type

import numpy as np
from scipy.optimize import minimize_scalar, newton

from .exceptions import ConfigError, ModelDomainError, PreconditionError, RiemannSolverError

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
DEFAULT_GRAVITY = 9.81
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100

StateVector = np.ndarray
FanFunction = Callable[[np.ndarray], np.ndarray]


def unit_direction(d: Sequence[float], n: int) -> np.ndarray:
    """Validate a unit direction in R^n"""
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape != (n,):
        raise PreconditionError(f"Direction must have {n} components, got {d.shape[0]}")
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > UNIT_TOL:
        raise PreconditionError(f"Direction {d.tolist()} is not a unit vector (|d| = {norm!r})")
    return d


@dataclass(frozen=True)
class Wave:
    """One elementary wave of a Riemann solution"""

    kind: str  # "shock", "rarefaction" or "contact"
    speeds: Tuple[float, float]  # (head, tail) for fans, (s, s) otherwise
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Region:
    """Self-similar region ending at ``upper`` (inclusive)"""

    upper: float
    state: Optional[np.ndarray] = None
    fan: Optional[FanFunction] = None

    def values(self, xi: np.ndarray) -> np.ndarray:
        if self.fan is not None:
            return self.fan(xi)
        return np.broadcast_to(self.state, xi.shape + self.state.shape)


@dataclass(frozen=True)
class WaveStructure:
    """Exact solution w(xi) of a 1-D Riemann problem, xi = s/t.

    Regions are ordered in xi; at a jump the left state is returned.
    """

    u_l: np.ndarray
    u_r: np.ndarray
    direction: np.ndarray
    waves: Tuple[Wave, ...]
    regions: Tuple[Region, ...]

    def sample(self, xi) -> np.ndarray:
        """Vectorized evaluation; returns shape xi.shape + (D,)"""
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1)
        uppers = np.array([r.upper for r in self.regions])
        index = np.searchsorted(uppers, flat, side="left")
        out = np.empty(flat.shape + self.u_l.shape)
        for k, region in enumerate(self.regions):
            mask = index == k
            if np.any(mask):
                out[mask] = region.values(flat[mask])
        return out.reshape(xi.shape + self.u_l.shape)

    def feature_speeds(self) -> Tuple[float, ...]:
        """Speeds of shocks, contacts and fan edges, increasing"""
        return tuple(sorted({r.upper for r in self.regions if np.isfinite(r.upper)}))

    def fan_intervals(self) -> Tuple[Tuple[float, float, FanFunction], ...]:
        fans = []
        lower = -np.inf
        for region in self.regions:
            if region.fan is not None:
                fans.append((lower, region.upper, region.fan))
            lower = region.upper
        return tuple(fans)

    def constant_states(self) -> Tuple[np.ndarray, ...]:
        return tuple(r.state for r in self.regions if r.state is not None)

    def value_range(
        self, func: Callable[[np.ndarray], np.ndarray] = lambda w: w
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Componentwise min and max of func(w) over every state the solution takes"""
        values = [np.atleast_1d(func(s)) for s in self.constant_states()]
        lo = np.min(values, axis=0)
        hi = np.max(values, axis=0)
        for head, tail, fan in self.fan_intervals():
            grid = np.linspace(head, tail, 257)
            sampled = np.array([np.atleast_1d(func(w)) for w in fan(grid)])
            for k in range(sampled.shape[1]):
                for sign in (1.0, -1.0):
                    j = int(np.argmax(sign * sampled[:, k]))
                    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
                    best = sampled[j, k]
                    if b > a:
                        res = minimize_scalar(
                            lambda x: -sign * np.atleast_1d(func(fan(np.array([x]))[0]))[k],
                            bounds=(a, b),
                            method="bounded",
                            options={"xatol": 1e-13},
                        )
                        best = sign * max(sign * best, -res.fun)
                    lo[k] = min(lo[k], best)
                    hi[k] = max(hi[k], best)
        return lo, hi

    def mirrored(self) -> "WaveStructure":
        """Same solution seen in the reflected coordinate s -> -s"""
        lowers = [-np.inf] + [r.upper for r in self.regions[:-1]]
        regions = []
        for region, lower in zip(reversed(self.regions), reversed(lowers)):
            fan = region.fan
            mirrored_fan = (lambda xi, f=fan: f(-xi)) if fan is not None else None
            regions.append(Region(upper=-lower, state=region.state, fan=mirrored_fan))
        waves = tuple(
            Wave(w.kind, (-w.speeds[0], -w.speeds[1]), w.right, w.left) for w in reversed(self.waves)
        )
        return WaveStructure(self.u_r, self.u_l, -self.direction, waves, tuple(regions))


class SystemModel(ABC):
    """A hyperbolic system of D conservation laws in n space dimensions"""

    name: str = "abstract"
    n: int
    D: int

    @abstractmethod
    def flux(self, u: np.ndarray) -> np.ndarray:
        """Flux matrix; shape (..., D) -> (..., D, n)"""

    @abstractmethod
    def max_speed(self, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Bound on |characteristic speed| of f·d; shape (..., D) -> (...)"""

    @abstractmethod
    def riemann_structure(
        self, u_l: np.ndarray, u_r: np.ndarray, d: np.ndarray, entropy: bool = True
    ) -> WaveStructure:
        """Exact Riemann solution for g(w) = f(w)·d"""

    @abstractmethod
    def godunov_flux_array(self, u_l: np.ndarray, u_r: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Godunov flux for stacked face states; shape (..., D)"""

    def check_admissible(self, u: np.ndarray) -> None:
        if not np.all(np.isfinite(u)):
            raise ModelDomainError(f"{self.name}: state {np.asarray(u).tolist()} is not finite")

    def state(self, values) -> StateVector:
        """Validated state vector"""
        u = np.atleast_1d(np.asarray(values, dtype=float))
        if u.shape[-1] != self.D:
            raise ModelDomainError(f"{self.name} expects {self.D} components, got {u.shape[-1]}")
        self.check_admissible(u)
        return u

    def directional_flux(self, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        """f(u)·d; shape (..., D)"""
        return self.flux(u) @ np.asarray(d, dtype=float)

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "n": self.n, "D": self.D}


class ScalarModel(SystemModel):
    """Scalar law with directional flux g(w) = c(d) * phi(w)"""

    D = 1

    @abstractmethod
    def coefficient(self, d: np.ndarray) -> float:
        """c(d) in g(w) = c(d) * phi(w)"""

    @abstractmethod
    def phi(self, w):
        """Scalar profile of the directional flux"""

    @abstractmethod
    def phi_prime(self, w):
        ...

    def check_admissible(self, u: np.ndarray) -> None:
        if not np.all(np.isfinite(u)):
            raise ModelDomainError(f"{self.name}: state is not finite", component="u")

    def riemann_structure(self, u_l, u_r, d, entropy=True) -> WaveStructure:
        d = unit_direction(d, self.n)
        u_l, u_r = self.state(u_l), self.state(u_r)
        c = self.coefficient(d)
        wl, wr = float(u_l[0]), float(u_r[0])
        lam_l, lam_r = c * self.phi_prime(wl), c * self.phi_prime(wr)

        if wl == wr:
            return WaveStructure(u_l, u_r, d, (), (Region(np.inf, state=u_l),))
        if lam_l > lam_r or not entropy or lam_l == lam_r:
            s = c * (self.phi(wr) - self.phi(wl)) / (wr - wl)
            kind = "contact" if lam_l == lam_r else "shock"
            wave = Wave(kind, (s, s), u_l, u_r)
            return WaveStructure(
                u_l, u_r, d, (wave,), (Region(s, state=u_l), Region(np.inf, state=u_r))
            )
        fan = self._fan(c)
        wave = Wave("rarefaction", (lam_l, lam_r), u_l, u_r)
        regions = (Region(lam_l, state=u_l), Region(lam_r, fan=fan), Region(np.inf, state=u_r))
        return WaveStructure(u_l, u_r, d, (wave,), regions)

    def _fan(self, c: float) -> FanFunction:
        raise ModelDomainError(f"{self.name} has no rarefaction waves")

    def godunov_flux_array(self, u_l, u_r, d):
        d = unit_direction(d, self.n)
        c = self.coefficient(d)
        wl, wr = np.asarray(u_l, dtype=float)[..., 0], np.asarray(u_r, dtype=float)[..., 0]
        lo, hi = np.minimum(wl, wr), np.maximum(wl, wr)
        critical = np.clip(self.critical_point(), lo, hi)
        candidates = np.stack([c * self.phi(wl), c * self.phi(wr), c * self.phi(critical)])
        flux = np.where(wl <= wr, candidates.min(axis=0), candidates.max(axis=0))
        return flux[..., None]

    def critical_point(self) -> float:
        """Where phi' vanishes, clipped into each face's state interval"""
        return 0.0


class Burgers(ScalarModel):
    """Multi-dimensional Burgers equation, f_j(u) = u^2/2 for every j"""

    name = "burgers"

    def __init__(self, n: int = 1):
        if n not in (1, 2):
            raise ModelDomainError(f"burgers supports n in {{1, 2}}, got {n}")
        self.n = n

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        half = 0.5 * u * u
        return np.repeat(half[..., None], self.n, axis=-1)

    def coefficient(self, d):
        return float(np.sum(d))

    def phi(self, w):
        return 0.5 * np.asarray(w) * np.asarray(w)

    def phi_prime(self, w):
        return w

    def max_speed(self, u, d):
        u = np.asarray(u, dtype=float)
        return np.abs(u[..., 0]) * abs(float(np.sum(d)))

    def _fan(self, c):
        return lambda xi: (np.asarray(xi, dtype=float) / c)[..., None]


class Advection(ScalarModel):
    """Linear advection with constant velocity a"""

    name = "advection"

    def __init__(self, velocity: Sequence[float] = (1.0,)):
        self.velocity = np.asarray(velocity, dtype=float).reshape(-1)
        self.n = self.velocity.size
        if self.n not in (1, 2):
            raise ModelDomainError(f"advection supports n in {{1, 2}}, got {self.n}")
        if not np.all(np.isfinite(self.velocity)):
            raise ModelDomainError("advection velocity must be finite", component="velocity")

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        return u[..., None] * self.velocity

    def coefficient(self, d):
        return float(self.velocity @ d)

    def phi(self, w):
        return np.asarray(w)

    def phi_prime(self, w):
        return 1.0

    def max_speed(self, u, d):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape[:-1], abs(float(self.velocity @ np.asarray(d, dtype=float))))

    def godunov_flux_array(self, u_l, u_r, d):
        d = unit_direction(d, self.n)
        c = self.coefficient(d)
        upwind = np.asarray(u_l if c >= 0.0 else u_r, dtype=float)
        return c * upwind

    def describe(self):
        return {**super().describe(), "velocity": self.velocity.tolist()}


class ShallowWater(SystemModel):
    """1-D shallow water equations in conserved variables (h, m = h*v)"""

    name = "shallow_water"
    n = 1
    D = 2

    def __init__(
        self,
        gravity: float = DEFAULT_GRAVITY,
        newton_tol: float = NEWTON_TOL,
        newton_max_iter: int = NEWTON_MAX_ITER,
    ):
        if not gravity > 0.0:
            raise ModelDomainError(f"gravity must be positive, got {gravity}", component="gravity")
        self.g = float(gravity)
        self.newton_tol = newton_tol
        self.newton_max_iter = newton_max_iter

    def check_admissible(self, u):
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise ModelDomainError("shallow_water: state is not finite")
        if np.any(u[..., 0] <= 0.0):
            raise ModelDomainError(
                f"shallow_water: depth h must be > 0, got {np.min(u[..., 0])!r}", component="h"
            )

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        h, m = u[..., 0], u[..., 1]
        return np.stack([m, m * m / h + 0.5 * self.g * h * h], axis=-1)[..., None]

    def max_speed(self, u, d):
        u = np.asarray(u, dtype=float)
        h, m = u[..., 0], u[..., 1]
        return (np.abs(m / h) + np.sqrt(self.g * h)) * abs(float(np.asarray(d).reshape(-1)[0]))

    def describe(self):
        return {**super().describe(), "gravity": self.g}

    # -- star state -------------------------------------------------------

    def _wave_curve(self, h, h_k):
        """Velocity jump across a wave from h_k to h, and its derivative"""
        h = np.maximum(h, 1e-300)
        rare = h <= h_k
        q = np.sqrt(0.5 * self.g * (h + h_k) / (h * h_k))
        value = np.where(rare, 2.0 * (np.sqrt(self.g * h) - np.sqrt(self.g * h_k)), (h - h_k) * q)
        slope = np.where(
            rare, np.sqrt(self.g / h), q - (h - h_k) * self.g / (4.0 * h * h * q)
        )
        return value, slope

    def star_state(self, u_l: np.ndarray, u_r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Star depth and velocity for stacked states (..., 2)"""
        u_l, u_r = np.asarray(u_l, dtype=float), np.asarray(u_r, dtype=float)
        self.check_admissible(u_l)
        self.check_admissible(u_r)
        shape = np.broadcast_shapes(u_l.shape[:-1], u_r.shape[:-1])
        h_l = np.broadcast_to(u_l[..., 0], shape).reshape(-1)
        h_r = np.broadcast_to(u_r[..., 0], shape).reshape(-1)
        v_l = np.broadcast_to(u_l[..., 1], shape).reshape(-1) / h_l
        v_r = np.broadcast_to(u_r[..., 1], shape).reshape(-1) / h_r
        c_l, c_r = np.sqrt(self.g * h_l), np.sqrt(self.g * h_r)
        if np.any(2.0 * (c_l + c_r) <= v_r - v_l):
            raise ModelDomainError("shallow_water: Riemann data generates a dry bed (vacuum)", "h")

        def residual(h):
            f_l, _ = self._wave_curve(h, h_l)
            f_r, _ = self._wave_curve(h, h_r)
            return f_l + f_r + v_r - v_l

        def slope(h):
            _, df_l = self._wave_curve(h, h_l)
            _, df_r = self._wave_curve(h, h_r)
            return df_l + df_r

        # two-rarefaction estimate
        guess = (0.5 * (c_l + c_r) - 0.25 * (v_r - v_l)) ** 2 / self.g
        options = dict(tol=self.newton_tol, maxiter=self.newton_max_iter, full_output=True, disp=False)
        if guess.size > 1:
            root, converged, _ = newton(residual, guess, fprime=slope, **options)
        else:
            root, info = newton(
                lambda h: float(residual(np.array([h]))[0]),
                float(guess[0]),
                fprime=lambda h: float(slope(np.array([h]))[0]),
                **options,
            )
            converged = np.array([info.converged])
        root = np.atleast_1d(np.asarray(root, dtype=float))
        if not np.all(converged) or not np.all(root > 0.0):
            raise RiemannSolverError(
                f"shallow_water: star depth Newton iteration did not converge in "
                f"{self.newton_max_iter} iterations",
                last_iterate=root,
            )
        f_l, _ = self._wave_curve(root, h_l)
        f_r, _ = self._wave_curve(root, h_r)
        v_star = 0.5 * (v_l + v_r) + 0.5 * (f_r - f_l)
        return root.reshape(shape), v_star.reshape(shape)

    # -- Riemann solution -------------------------------------------------

    def _fan_left(self, v_l, c_l):
        def fan(xi):
            xi = np.asarray(xi, dtype=float)
            v = (v_l + 2.0 * c_l + 2.0 * xi) / 3.0
            c = (v_l + 2.0 * c_l - xi) / 3.0
            h = c * c / self.g
            return np.stack([h, h * v], axis=-1)

        return fan

    def _fan_right(self, v_r, c_r):
        def fan(xi):
            xi = np.asarray(xi, dtype=float)
            v = (v_r - 2.0 * c_r + 2.0 * xi) / 3.0
            c = (-v_r + 2.0 * c_r + xi) / 3.0
            h = c * c / self.g
            return np.stack([h, h * v], axis=-1)

        return fan

    def riemann_structure(self, u_l, u_r, d, entropy=True) -> WaveStructure:
        d = unit_direction(d, self.n)
        if not entropy:
            raise ModelDomainError("shallow_water only supports entropy Riemann solutions")
        u_l, u_r = self.state(u_l), self.state(u_r)
        if d[0] < 0.0:
            # g = -f: the f-problem with swapped data, read at -xi
            return self.riemann_structure(u_r, u_l, -d).mirrored()
        if np.array_equal(u_l, u_r):
            return WaveStructure(u_l, u_r, d, (), (Region(np.inf, state=u_l),))

        h_l, h_r = u_l[0], u_r[0]
        v_l, v_r = u_l[1] / h_l, u_r[1] / h_r
        c_l, c_r = np.sqrt(self.g * h_l), np.sqrt(self.g * h_r)
        h_star, v_star = (float(x) for x in self.star_state(u_l, u_r))
        c_star = np.sqrt(self.g * h_star)
        star = np.array([h_star, h_star * v_star])

        waves, regions = [], []
        if h_star > h_l:
            s = v_l - c_l * np.sqrt(0.5 * (h_star + h_l) * h_star / (h_l * h_l))
            waves.append(Wave("shock", (s, s), u_l, star))
            regions.append(Region(s, state=u_l))
        else:
            head, tail = v_l - c_l, v_star - c_star
            waves.append(Wave("rarefaction", (head, tail), u_l, star))
            regions += [Region(head, state=u_l), Region(tail, fan=self._fan_left(v_l, c_l))]
        if h_star > h_r:
            s = v_r + c_r * np.sqrt(0.5 * (h_star + h_r) * h_star / (h_r * h_r))
            waves.append(Wave("shock", (s, s), star, u_r))
            regions.append(Region(s, state=star))
        else:
            tail, head = v_star + c_star, v_r + c_r
            waves.append(Wave("rarefaction", (tail, head), star, u_r))
            regions += [Region(tail, state=star), Region(head, fan=self._fan_right(v_r, c_r))]
        regions.append(Region(np.inf, state=u_r))
        return WaveStructure(u_l, u_r, d, tuple(waves), tuple(regions))

    def godunov_flux_array(self, u_l, u_r, d):
        d = unit_direction(d, self.n)
        u_l, u_r = np.asarray(u_l, dtype=float), np.asarray(u_r, dtype=float)
        if d[0] < 0.0:
            u_l, u_r = u_r, u_l
        w = self._sample_at_zero(u_l, u_r)
        return self.directional_flux(w, d)

    def _sample_at_zero(self, u_l, u_r):
        """Vectorized w(0) of the standard (d = +1) Riemann problem"""
        h_l, h_r = u_l[..., 0], u_r[..., 0]
        v_l, v_r = u_l[..., 1] / h_l, u_r[..., 1] / h_r
        c_l, c_r = np.sqrt(self.g * h_l), np.sqrt(self.g * h_r)
        h_s, v_s = self.star_state(u_l, u_r)
        c_s = np.sqrt(self.g * h_s)
        star = np.stack([h_s, h_s * v_s], axis=-1)

        shock_l = h_s > h_l
        s_l = v_l - c_l * np.sqrt(0.5 * (h_s + h_l) * h_s / (h_l * h_l))
        fan_l = self._fan_left(v_l, c_l)(np.zeros_like(h_l))
        left_of_left = np.where(shock_l, 0.0 <= s_l, 0.0 <= v_l - c_l)
        in_fan_l = ~shock_l & ~left_of_left & (0.0 <= v_s - c_s)

        shock_r = h_s > h_r
        s_r = v_r + c_r * np.sqrt(0.5 * (h_s + h_r) * h_s / (h_r * h_r))
        fan_r = self._fan_right(v_r, c_r)(np.zeros_like(h_r))
        in_star = np.where(shock_r, 0.0 <= s_r, 0.0 <= v_s + c_s)
        in_fan_r = ~shock_r & ~in_star & (0.0 <= v_r + c_r)

        right = np.where(in_star[..., None], star, np.where(in_fan_r[..., None], fan_r, u_r))
        left = np.where(in_fan_l[..., None], fan_l, right)
        return np.where(left_of_left[..., None], u_l, left)


MODEL_REGISTRY: Dict[str, Type[SystemModel]] = {
    "burgers": Burgers,
    "advection": Advection,
    "shallow_water": ShallowWater,
}


def get_model(name: str, **params) -> SystemModel:
    """Build a model by name; unknown names raise ConfigError with suggestions"""
    try:
        cls = MODEL_REGISTRY[name]
    except KeyError:
        hints = difflib.get_close_matches(name, MODEL_REGISTRY, n=3) or sorted(MODEL_REGISTRY)
        raise ConfigError(
            f"Unknown model '{name}'; did you mean one of: {', '.join(hints)}?", paths=["model.name"]
        ) from None
    return cls(**params)


def flux_eval(model: SystemModel, u) -> np.ndarray:
    """f(u) as a D x n matrix"""
    return model.flux(model.state(u))


def directional_flux(model: SystemModel, u, d) -> np.ndarray:
    """f(u)·d for a unit direction d"""
    d = unit_direction(d, model.n)
    return model.directional_flux(model.state(u), d)


def riemann_solve(model: SystemModel, u_l, u_r, d, xi: float, entropy: bool = True) -> StateVector:
    """w(xi) of the Riemann problem for g(w) = f(w)·d"""
    structure = model.riemann_structure(u_l, u_r, d, entropy=entropy)
    return structure.sample(np.array([xi]))[0]


def godunov_flux(model: SystemModel, u_l, u_r, d) -> np.ndarray:
    """Flux of the Riemann solution sampled at xi = 0"""
    u_l, u_r = model.state(u_l), model.state(u_r)
    return model.godunov_flux_array(u_l, u_r, d)
