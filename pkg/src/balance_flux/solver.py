"""
First-order Godunov finite-volume solver on uniform Cartesian meshes.

Every step adds the time-integrated numerical flux of each face to a flux
ledger, so any union of cells satisfies the discrete balance law up to
roundoff.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exact import PlanarWeakSolution, mass as exact_mass
from .exceptions import (
    CheckpointError,
    ConfigError,
    DegenerateStepError,
    PreconditionError,
    SamplerDomainError,
)
from .geometry import AxisFace, Box, Domain, Face
from .quadrature import QuadratureResult, stable_sum
from .systems import Advection, SystemModel

logger = logging.getLogger(__name__)

OUTFLOW = "outflow"
PERIODIC = "periodic"
BOUNDARY_CONDITIONS = (OUTFLOW, PERIODIC)
# relative slack when matching face positions to mesh lines
GRID_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class Mesh:
    box: Box
    cells: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if len(self.cells) != self.box.n:
            raise PreconditionError(f"Mesh needs {self.box.n} cell counts, got {len(self.cells)}")
        if any(c < 1 for c in self.cells):
            raise PreconditionError(f"Cell counts must be >= 1, got {self.cells}")

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def spacing(self) -> np.ndarray:
        return self.box.extent / np.array(self.cells)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def face_measure(self, axis: int) -> float:
        return float(np.prod([h for k, h in enumerate(self.spacing) if k != axis]))

    def edges(self, axis: int) -> np.ndarray:
        return np.linspace(self.box.lower[axis], self.box.upper[axis], self.cells[axis] + 1)

    def centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    def line_index(self, axis: int, position: float) -> Optional[int]:
        """Index of the mesh line x_axis = position, or None when off the grid"""
        h = self.spacing[axis]
        k = (position - self.box.lower[axis]) / h
        nearest = int(round(k))
        if abs(k - nearest) > GRID_MATCH_TOL or not 0 <= nearest <= self.cells[axis]:
            return None
        return nearest

    def cell_boxes(self) -> List[Tuple[Tuple[int, ...], Box]]:
        out = []
        for index in np.ndindex(*self.cells):
            lower = tuple(self.edges(j)[i] for j, i in enumerate(index))
            upper = tuple(self.edges(j)[i + 1] for j, i in enumerate(index))
            out.append((index, Box(lower, upper)))
        return out


@dataclass(frozen=True)
class CellField:
    """Cell averages, shape cells + (D,), at time t"""

    values: np.ndarray = field(repr=False)
    t: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError(f"Cell field at t={self.t} has non-finite values")

    def total(self, volume: float, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Sum of volume * u over the masked cells"""
        chosen = self.values[mask] if mask is not None else self.values.reshape(-1, self.values.shape[-1])
        if chosen.shape[0] == 0:
            return np.zeros(self.values.shape[-1])
        return volume * np.array([math.fsum(chosen[:, k]) for k in range(chosen.shape[1])])


@dataclass(frozen=True)
class FluxLedger:
    """Accumulated F * |face| * dt per face since ``t_start``.

    ``faces[j]`` has shape cells with cells[j] + 1 along axis j, plus (D,).
    Fluxes are recorded in the +e_j direction.
    """

    faces: Tuple[np.ndarray, ...] = field(repr=False)
    t_start: float
    t: float

    @classmethod
    def empty(cls, mesh: Mesh, components: int, t_start: float = 0.0) -> "FluxLedger":
        faces = []
        for j in range(mesh.n):
            shape = list(mesh.cells)
            shape[j] += 1
            faces.append(np.zeros(tuple(shape) + (components,)))
        return cls(tuple(faces), t_start, t_start)

    def added(self, increments: Sequence[np.ndarray], dt: float) -> "FluxLedger":
        return FluxLedger(tuple(a + b for a, b in zip(self.faces, increments)), self.t_start, self.t + dt)


@dataclass(frozen=True)
class RiemannData:
    """Planar Riemann initial data u_l | u_r across x·normal = offset"""

    u_l: Tuple[float, ...]
    u_r: Tuple[float, ...]
    normal: Optional[Tuple[float, ...]] = None
    offset: float = 0.0
    entropy: bool = True

    kind = "riemann"

    def solution(self, model: SystemModel) -> PlanarWeakSolution:
        normal = self.normal if self.normal is not None else (1.0,) + (0.0,) * (model.n - 1)
        return PlanarWeakSolution(model, tuple(normal), self.offset, np.array(self.u_l), np.array(self.u_r), self.entropy)


@dataclass(frozen=True)
class SineData:
    """u0(x) = base + amplitude * sin(2 pi k·(x - a)/L), one wave per mesh period"""

    base: Tuple[float, ...]
    amplitude: Tuple[float, ...]
    wavenumbers: Tuple[int, ...]

    kind = "sine"

    def phase_rates(self, box: Box) -> np.ndarray:
        return 2.0 * math.pi * np.array(self.wavenumbers, dtype=float) / box.extent

    def cell_averages(self, mesh: Mesh, shift: Optional[np.ndarray] = None) -> np.ndarray:
        """Exact cell averages of u0(x - shift)"""
        alpha = self.phase_rates(mesh.box)
        shift = np.zeros(mesh.n) if shift is None else np.asarray(shift, dtype=float)
        factors = []
        for j in range(mesh.n):
            e = mesh.edges(j) - mesh.box.lower[j] - shift[j]
            if alpha[j] == 0.0:
                factors.append(np.ones(mesh.cells[j], dtype=complex))
            else:
                # average of exp(i alpha x) over each cell
                factors.append((np.exp(1j * alpha[j] * e[1:]) - np.exp(1j * alpha[j] * e[:-1])) / (1j * alpha[j] * mesh.spacing[j]))
        profile = factors[0]
        for f in factors[1:]:
            profile = np.multiply.outer(profile, f)
        wave = np.imag(profile)
        return np.array(self.base) + wave[..., None] * np.array(self.amplitude)


InitialData = Union[RiemannData, SineData]


@dataclass(frozen=True)
class SolverConfig:
    model: SystemModel
    mesh: Mesh
    cfl: float
    t_end: float
    bc: str
    initial: InitialData

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError(f"CFL number must lie in (0, 1), got {self.cfl}", paths=["solver.cfl"])
        if not self.t_end > 0.0:
            raise ConfigError(f"End time must be positive, got {self.t_end}", paths=["solver.t_end"])
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"Unknown boundary condition '{self.bc}'", paths=["solver.bc"])
        if self.mesh.n != self.model.n:
            raise ConfigError(
                f"Mesh dimension {self.mesh.n} does not match model dimension {self.model.n}",
                paths=["solver.mesh"],
            )
        if isinstance(self.model, Advection) and not np.any(self.model.velocity != 0.0):
            raise ConfigError("Advection velocity must be nonzero for time stepping", paths=["model.velocity"])


class RunMetrics:
    """Counters collected while stepping"""

    def __init__(self, n: int, components: int):
        self.steps = 0
        self.clipped_steps = 0
        self.dt_min = math.inf
        self.dt_max = 0.0
        self.max_cfl = 0.0
        self.flux_sup = np.zeros((n, components))

    def record_step(self, dt: float, courant: float, clipped: bool):
        self.steps += 1
        self.clipped_steps += int(clipped)
        self.dt_min = min(self.dt_min, dt)
        self.dt_max = max(self.dt_max, dt)
        self.max_cfl = max(self.max_cfl, courant)

    def record_fluxes(self, axis: int, fluxes: np.ndarray):
        self.flux_sup[axis] = np.maximum(self.flux_sup[axis], np.abs(fluxes).reshape(-1, fluxes.shape[-1]).max(axis=0))

    def get_metrics(self) -> Dict[str, object]:
        return {
            "steps": self.steps,
            "clipped_steps": self.clipped_steps,
            "dt": {"min": self.dt_min if self.steps else 0.0, "max": self.dt_max},
            "max_cfl": self.max_cfl,
        }


def init(config: SolverConfig) -> Tuple[CellField, FluxLedger]:
    """Exact cell averages of the initial data and an empty ledger"""
    model, mesh = config.model, config.mesh
    initial = config.initial
    if isinstance(initial, SineData):
        values = initial.cell_averages(mesh)
    else:
        sol = initial.solution(model)
        values = np.empty(mesh.cells + (model.D,))
        volume = mesh.cell_volume
        cut = 0
        for index, cell in mesh.cell_boxes():
            s = cell.corners() @ sol.nu - sol.offset
            if s.max() <= 0.0:
                values[index] = sol.u_l
            elif s.min() >= 0.0:
                values[index] = sol.u_r
            else:
                values[index] = exact_mass(sol, cell, 0.0) / volume
                cut += 1
        logger.debug(f"Initialized {np.prod(mesh.cells)} cells, {cut} cut by the interface")
    model.check_admissible(values)
    return CellField(values, 0.0), FluxLedger.empty(mesh, model.D, 0.0)


def _neighbours(values: np.ndarray, axis: int, bc: str) -> Tuple[np.ndarray, np.ndarray]:
    """States left and right of every face along ``axis`` (ghost cells included)"""
    if bc == PERIODIC:
        first = np.take(values, [-1], axis=axis)
        last = np.take(values, [0], axis=axis)
    else:
        first = np.take(values, [0], axis=axis)
        last = np.take(values, [-1], axis=axis)
    padded = np.concatenate([first, values, last], axis=axis)
    n = padded.shape[axis]
    left = np.take(padded, np.arange(0, n - 1), axis=axis)
    right = np.take(padded, np.arange(1, n), axis=axis)
    return left, right


def _max_speed(model: SystemModel, values: np.ndarray) -> float:
    speeds = [model.max_speed(values, np.eye(model.n)[j]) for j in range(model.n)]
    return float(max(np.max(s) for s in speeds))


def step(
    field: CellField,
    ledger: FluxLedger,
    model: SystemModel,
    cfl: float,
    mesh: Mesh,
    bc: str = OUTFLOW,
    max_dt: float = math.inf,
    metrics: Optional[RunMetrics] = None,
) -> Tuple[CellField, FluxLedger, float]:
    """One unsplit Godunov step; dt is the CFL step clipped to ``max_dt``"""
    model.check_admissible(field.values)
    speed = _max_speed(model, field.values)
    h_min = float(np.min(mesh.spacing))
    if speed == 0.0:
        raise DegenerateStepError(f"Maximum wave speed is zero at t={field.t}; no CFL time step exists")
    dt_cfl = cfl * h_min / speed
    dt = min(dt_cfl, max_dt)
    if not dt > 0.0:
        raise DegenerateStepError(f"Non-positive time step {dt} at t={field.t}")

    volume = mesh.cell_volume
    increments, update = [], np.zeros_like(field.values)
    for j in range(mesh.n):
        left, right = _neighbours(field.values, j, bc)
        fluxes = model.godunov_flux_array(left, right, np.eye(mesh.n)[j])
        if metrics is not None:
            metrics.record_fluxes(j, fluxes)
        inc = fluxes * (mesh.face_measure(j) * dt)
        increments.append(inc)
        n = inc.shape[j]
        update -= np.take(inc, np.arange(1, n), axis=j) - np.take(inc, np.arange(0, n - 1), axis=j)
    values = field.values + update / volume
    if metrics is not None:
        metrics.record_step(dt, dt * speed / h_min, dt < dt_cfl)
    return CellField(values, field.t + dt), ledger.added(increments, dt), dt


@dataclass(frozen=True)
class Checkpoint:
    t: float
    field: CellField
    segment: FluxLedger  # fluxes accumulated since the previous checkpoint


class Trajectory:
    """Snapshots and ledger segments at the checkpoint times of one run"""

    def __init__(self, config: SolverConfig, metrics: RunMetrics):
        self.config = config
        self.metrics = metrics
        self._checkpoints: List[Checkpoint] = []

    @property
    def mesh(self) -> Mesh:
        return self.config.mesh

    @property
    def model(self) -> SystemModel:
        return self.config.model

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(c.t for c in self._checkpoints)

    @property
    def checkpoints(self) -> Tuple[Checkpoint, ...]:
        return tuple(self._checkpoints)

    def record(self, field: CellField, segment: FluxLedger) -> None:
        if self._checkpoints and field.t <= self._checkpoints[-1].t:
            raise CheckpointError(f"Checkpoint at t={field.t} does not advance the trajectory")
        self._checkpoints.append(Checkpoint(field.t, field, segment))

    def _index(self, t: float) -> int:
        for k, c in enumerate(self._checkpoints):
            if abs(c.t - t) <= 1e-12 * max(1.0, abs(t)):
                return k
        raise CheckpointError(f"No checkpoint at t={t}; available: {list(self.times)}")

    def checkpoint(self, t: float) -> Checkpoint:
        return self._checkpoints[self._index(t)]

    def field_at(self, t: float) -> CellField:
        return self.checkpoint(t).field

    def ledger_between(self, t1: float, t2: float) -> Tuple[np.ndarray, ...]:
        """Per-face fluxes integrated over [t1, t2]; both ends must be checkpoints"""
        a, b = self._index(t1), self._index(t2)
        if b < a:
            raise CheckpointError(f"Checkpoint pair ({t1}, {t2}) is inverted")
        if a == b:
            return tuple(np.zeros_like(f) for f in self._checkpoints[a].segment.faces)
        segments = [c.segment.faces for c in self._checkpoints[a + 1 : b + 1]]
        if len(segments) == 1:
            return segments[0]
        return tuple(stable_sum([s[j] for s in segments]) for j in range(self.mesh.n))

    def state_range(self) -> Tuple[np.ndarray, np.ndarray]:
        values = np.concatenate([c.field.values.reshape(-1, self.model.D) for c in self._checkpoints])
        return values.min(axis=0), values.max(axis=0)


def run(config: SolverConfig, checkpoint_times: Sequence[float] = ()) -> Trajectory:
    """Step to ``t_end`` landing exactly on every checkpoint time.

    The trajectory always records t = 0 and t_end.
    """
    times = [float(t) for t in checkpoint_times]
    if any(b <= a for a, b in zip(times[:-1], times[1:])):
        raise CheckpointError(f"Checkpoint times must be strictly increasing, got {times}")
    if times and (times[0] < 0.0 or times[-1] > config.t_end):
        raise CheckpointError(f"Checkpoint times must lie in [0, {config.t_end}], got {times}")
    targets = sorted({t for t in times if t > 0.0} | {config.t_end})

    model, mesh = config.model, config.mesh
    metrics = RunMetrics(mesh.n, model.D)
    trajectory = Trajectory(config, metrics)
    field, ledger = init(config)
    trajectory.record(field, ledger)
    logger.info(
        f"Running {model.name} on {mesh.cells} cells to t={config.t_end} "
        f"({config.bc}, cfl={config.cfl}, {len(targets)} checkpoints)"
    )
    for target in targets:
        while field.t < target:
            remaining = target - field.t
            field, ledger, dt = step(field, ledger, model, config.cfl, mesh, config.bc, remaining, metrics)
            if dt >= remaining:
                field = CellField(field.values, target)
        trajectory.record(field, ledger)
        logger.debug(f"Checkpoint t={target} after {metrics.steps} steps")
        ledger = FluxLedger.empty(mesh, model.D, target)
    logger.info(f"Run finished: {metrics.get_metrics()}")
    return trajectory


def exact_cell_averages(config: SolverConfig, t: float) -> np.ndarray:
    """Exact cell averages at time t for periodic advection of sine data"""
    if not (isinstance(config.model, Advection) and isinstance(config.initial, SineData) and config.bc == PERIODIC):
        raise PreconditionError("Exact cell averages need periodic advection of sine data")
    return config.initial.cell_averages(config.mesh, shift=config.model.velocity * t)


def discrete_balance_residual(
    trajectory: Trajectory, cell_union: np.ndarray, pair: Tuple[float, float], relative: bool = False
) -> np.ndarray:
    """(sum_U V u)(t2) - (sum_U V u)(t1) + net ledger outflow through dU"""
    mesh = trajectory.mesh
    mask = np.asarray(cell_union, dtype=bool)
    if mask.shape != mesh.cells:
        raise PreconditionError(f"Cell union shape {mask.shape} does not match mesh {mesh.cells}")
    if not mask.any():
        raise PreconditionError("Cell union is empty")
    t1, t2 = pair
    volume = mesh.cell_volume
    m1 = trajectory.field_at(t1).total(volume, mask)
    m2 = trajectory.field_at(t2).total(volume, mask)
    faces = trajectory.ledger_between(t1, t2)

    parts, magnitude = [], [np.abs(m1), np.abs(m2)]
    for j, ledger in enumerate(faces):
        pad = [(0, 0)] * mesh.n
        pad[j] = (1, 1)
        padded = np.pad(mask, pad, constant_values=False)
        n = padded.shape[j]
        sign = np.take(padded, np.arange(0, n - 1), axis=j).astype(float) - np.take(padded, np.arange(1, n), axis=j)
        contributions = (ledger * sign[..., None]).reshape(-1, ledger.shape[-1])
        parts.append(np.array([math.fsum(contributions[:, k]) for k in range(contributions.shape[1])]))
        magnitude.append(np.abs(contributions).sum(axis=0))
    outflow = stable_sum(parts)
    residual = stable_sum([m2, -m1, outflow])
    if relative:
        scale = np.maximum(np.sum(magnitude, axis=0), np.finfo(float).tiny)
        return residual / scale
    return residual


class LedgerSampler:
    """Flux and mass source backed by a solver trajectory.

    Faces must lie on mesh lines with cell-aligned cross sections and times
    must be checkpoints.
    """

    provenance = "solver-ledger"

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory

    @property
    def model(self) -> SystemModel:
        return self.trajectory.model

    def _cell_range(self, axis: int, lo: float, hi: float) -> Tuple[int, int]:
        mesh = self.trajectory.mesh
        i0, i1 = mesh.line_index(axis, lo), mesh.line_index(axis, hi)
        if i0 is None or i1 is None:
            raise SamplerDomainError(f"Interval [{lo}, {hi}] on axis {axis} is not aligned with the mesh")
        return i0, i1

    def face_flux(self, face: Face, t1: float, t2: float, tol: float = 0.0) -> QuadratureResult:
        mesh = self.trajectory.mesh
        if not isinstance(face, AxisFace) or face.n != mesh.n:
            raise SamplerDomainError(f"Ledger can only report axis-aligned faces in R^{mesh.n}, got {face}")
        k = mesh.line_index(face.axis, face.position)
        if k is None:
            raise SamplerDomainError(f"Face x_{face.axis}={face.position} does not lie on a mesh line")
        ledger = self.trajectory.ledger_between(t1, t2)[face.axis]
        if mesh.n == 1:
            picked = ledger[k][None, :]
        else:
            other = 1 - face.axis
            i0, i1 = self._cell_range(other, *face.cross_section[0])
            picked = ledger[k, i0:i1] if face.axis == 0 else ledger[i0:i1, k]
        if picked.shape[0] == 0:
            return QuadratureResult(np.zeros(self.model.D), 0.0)
        return QuadratureResult(face.orientation * stable_sum(list(picked)), 0.0)

    def mass(self, domain: Domain, t: float, tol: float = 0.0) -> QuadratureResult:
        mesh = self.trajectory.mesh
        if not isinstance(domain, Box) or domain.n != mesh.n:
            raise SamplerDomainError(f"Ledger masses need a box in R^{mesh.n}, got {domain}")
        mask = np.zeros(mesh.cells, dtype=bool)
        index = tuple(slice(*self._cell_range(j, domain.lower[j], domain.upper[j])) for j in range(mesh.n))
        mask[index] = True
        return QuadratureResult(self.trajectory.field_at(t).total(mesh.cell_volume, mask), 0.0)

    def state_range(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.trajectory.state_range()

    def state_bound(self) -> float:
        values = np.concatenate([c.field.values.reshape(-1, self.model.D) for c in self.trajectory.checkpoints])
        return float(np.max(np.linalg.norm(values, axis=-1)))

    def flux_bound(self, face: Face) -> np.ndarray:
        """Largest numerical face flux seen along the face's axis"""
        if not isinstance(face, AxisFace):
            raise SamplerDomainError(f"Ledger flux bounds need an axis face, got {face}")
        return self.trajectory.metrics.flux_sup[face.axis].copy()
