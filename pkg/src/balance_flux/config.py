"""
Run configuration schema.

A run is described by one JSON document; it is validated in full before any
computation starts and unknown keys are rejected.
"""

import difflib
import json
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exact import Cylinder, PlanarWeakSolution
from .exceptions import BalanceFluxError, ConfigError
from .geometry import BoundaryFoliation, Box, Disk, Domain, foliate
from .output import stable_digest
from .settings import get_settings
from .solver import Mesh, RiemannData, SineData, SolverConfig
from .systems import MODEL_REGISTRY, SystemModel, get_model

logger = logging.getLogger(__name__)

CLAIMS = (
    "balance",
    "lipschitz-trace",
    "time-continuity",
    "corollary-box",
    "weak-form",
    "flux-divergence",
    "discrete-balance",
    "convergence",
)
Claim = Literal[
    "balance",
    "lipschitz-trace",
    "time-continuity",
    "corollary-box",
    "weak-form",
    "flux-divergence",
    "discrete-balance",
    "convergence",
]
ConvergenceCaseName = Literal["advection-sine", "burgers-shock", "burgers-rarefaction"]


def _tolerances():
    return get_settings().tolerances


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(StrictModel):
    name: str
    n: int = Field(default=1, ge=1, le=2)
    velocity: Optional[List[float]] = None
    gravity: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("name")
    @classmethod
    def known_model(cls, v: str) -> str:
        if v not in MODEL_REGISTRY:
            hints = difflib.get_close_matches(v, MODEL_REGISTRY, n=3) or sorted(MODEL_REGISTRY)
            raise ValueError(f"unknown model '{v}'; did you mean one of: {', '.join(hints)}?")
        return v

    @model_validator(mode="after")
    def consistent_dimension(self) -> "ModelSpec":
        if self.velocity is not None:
            if self.name != "advection":
                raise ValueError("velocity only applies to the advection model")
            if len(self.velocity) != self.n:
                raise ValueError(f"velocity needs {self.n} components, got {len(self.velocity)}")
        if self.gravity is not None and self.name != "shallow_water":
            raise ValueError("gravity only applies to the shallow_water model")
        if self.name == "shallow_water" and self.n != 1:
            raise ValueError("shallow_water is one-dimensional")
        return self

    def build(self) -> SystemModel:
        settings = get_settings().solver
        if self.name == "burgers":
            return get_model("burgers", n=self.n)
        if self.name == "advection":
            return get_model("advection", velocity=self.velocity or [1.0] + [0.0] * (self.n - 1))
        return get_model(
            "shallow_water",
            gravity=self.gravity or settings.gravity,
            newton_tol=settings.newton_tol,
            newton_max_iter=settings.newton_max_iter,
        )


class DomainSpec(StrictModel):
    kind: Literal["box", "disk"] = "box"
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def complete(self) -> "DomainSpec":
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ValueError("a box needs 'lower' and 'upper'")
            if len(self.lower) != len(self.upper) or any(b <= a for a, b in zip(self.lower, self.upper)):
                raise ValueError("box bounds must match in length and satisfy lower < upper")
        elif self.center is None or self.radius is None or len(self.center) != 2:
            raise ValueError("a disk needs a 2-D 'center' and a 'radius'")
        return self

    def build(self) -> Domain:
        if self.kind == "box":
            return Box(tuple(self.lower), tuple(self.upper))
        return Disk(tuple(self.center), self.radius)


class FoliationSpec(StrictModel):
    delta: float = Field(gt=0.0, lt=1.0)
    width: float = Field(gt=0.0)
    count: int = Field(default=5, ge=2)
    quadrature_order: int = Field(default=8, ge=1)


class OracleSpec(StrictModel):
    u_l: List[float]
    u_r: List[float]
    normal: Optional[List[float]] = None
    offset: float = 0.0
    entropy: bool = True

    @field_validator("normal")
    @classmethod
    def normalized(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is None:
            return v
        norm = math.sqrt(sum(c * c for c in v))
        if norm == 0.0:
            raise ValueError("normal must be nonzero")
        return [c / norm for c in v]

    def riemann_data(self) -> RiemannData:
        normal = tuple(self.normal) if self.normal is not None else None
        return RiemannData(tuple(self.u_l), tuple(self.u_r), normal, self.offset, self.entropy)


class SectionSpec(StrictModel):
    """Positions lo..hi of +e_axis oriented sections of the configured box"""

    axis: int = Field(default=0, ge=0, le=1)
    lo: float
    hi: float

    @model_validator(mode="after")
    def ordered(self) -> "SectionSpec":
        if self.hi < self.lo:
            raise ValueError("section needs lo <= hi")
        return self

    def positions(self, K: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, K + 1)


class MeshSpec(StrictModel):
    lower: List[float]
    upper: List[float]
    cells: List[int]

    @model_validator(mode="after")
    def consistent(self) -> "MeshSpec":
        if not len(self.lower) == len(self.upper) == len(self.cells):
            raise ValueError("mesh lower, upper and cells must have the same length")
        if any(c < 1 for c in self.cells):
            raise ValueError("cell counts must be >= 1")
        if any(b <= a for a, b in zip(self.lower, self.upper)):
            raise ValueError("mesh bounds must satisfy lower < upper")
        return self


class InitSpec(StrictModel):
    kind: Literal["oracle", "riemann", "sine"] = "oracle"
    u_l: Optional[List[float]] = None
    u_r: Optional[List[float]] = None
    normal: Optional[List[float]] = None
    offset: float = 0.0
    base: Optional[List[float]] = None
    amplitude: Optional[List[float]] = None
    wavenumbers: Optional[List[int]] = None

    @model_validator(mode="after")
    def complete(self) -> "InitSpec":
        if self.kind == "riemann" and (self.u_l is None or self.u_r is None):
            raise ValueError("riemann initial data needs 'u_l' and 'u_r'")
        if self.kind == "sine" and (self.base is None or self.amplitude is None or self.wavenumbers is None):
            raise ValueError("sine initial data needs 'base', 'amplitude' and 'wavenumbers'")
        return self


class SolverSpec(StrictModel):
    mesh: MeshSpec
    cfl: float = Field(default_factory=lambda: get_settings().solver.cfl, gt=0.0, lt=1.0)
    t_end: float = Field(gt=0.0)
    checkpoints: List[float] = Field(default_factory=list)
    bc: Literal["outflow", "periodic"] = "outflow"
    init: InitSpec = Field(default_factory=InitSpec)

    @model_validator(mode="after")
    def checkpoints_in_range(self) -> "SolverSpec":
        times = self.checkpoints
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if times and (times[0] < 0.0 or times[-1] > self.t_end):
            raise ValueError("checkpoints must lie in [0, t_end]")
        return self


class ToleranceSpec(StrictModel):
    tol: float = Field(default_factory=lambda: _tolerances().tol, gt=0.0)
    quadrature_tol: float = Field(default_factory=lambda: _tolerances().quadrature_tol, gt=0.0)
    weak_form_tol: float = Field(default_factory=lambda: _tolerances().weak_form_tol, gt=0.0)
    discrete_balance_tol: float = Field(default_factory=lambda: _tolerances().discrete_balance_tol, gt=0.0)
    lipschitz_slope_tol: float = Field(default=1e-4, gt=0.0)
    ledger_slope_tol: float = Field(default=0.1, gt=0.0)
    lipschitz_growth: float = Field(default=0.05, ge=0.0)


class TraceSpec(StrictModel):
    t1: float = Field(default=0.0, ge=0.0)
    t2: float = Field(default=1.0, ge=0.0)
    K: int = Field(default=8, ge=2)
    source: Literal["oracle", "solver"] = "oracle"
    section: Optional[SectionSpec] = None

    @model_validator(mode="after")
    def ordered(self) -> "TraceSpec":
        if self.t2 < self.t1:
            raise ValueError("trace needs t1 <= t2")
        return self


class ProbeSpec(StrictModel):
    """Point and time at which the instantaneous flux should jump"""

    point: List[float]
    normal: List[float]
    t: float = Field(gt=0.0)
    threshold: float = Field(default=0.4, ge=0.0)


class DivergenceSpec(StrictModel):
    centers: List[List[float]]
    sizes: List[float]

    @field_validator("sizes")
    @classmethod
    def positive(cls, v: List[float]) -> List[float]:
        if not v or any(s <= 0.0 for s in v):
            raise ValueError("sizes must be a nonempty list of positive numbers")
        return v


class VerifySpec(StrictModel):
    checks: Optional[List[Claim]] = None
    t1: float = Field(default=0.0, ge=0.0)
    t2: float = Field(default=1.0, gt=0.0)
    K_levels: List[int] = Field(default_factory=lambda: [2, 4, 8, 16, 32, 64])
    exact_slope: Optional[float] = Field(default=None, ge=0.0)
    section: Optional[SectionSpec] = None
    t_grid: Optional[List[float]] = None
    probe: Optional[ProbeSpec] = None
    trials: int = Field(default=10, ge=1)
    divergence: Optional[DivergenceSpec] = None
    unions: int = Field(default=100, ge=1)

    @field_validator("K_levels")
    @classmethod
    def doubling(cls, v: List[int]) -> List[int]:
        if len(v) < 3 or any(k < 2 for k in v) or any(b != 2 * a for a, b in zip(v[:-1], v[1:])):
            raise ValueError("K_levels must hold at least 3 doubling values >= 2")
        return v

    @model_validator(mode="after")
    def ordered(self) -> "VerifySpec":
        if self.t2 <= self.t1:
            raise ValueError("verify needs t1 < t2")
        if self.t_grid is not None and any(b < a for a, b in zip(self.t_grid[:-1], self.t_grid[1:])):
            raise ValueError("t_grid must be sorted")
        return self


class ConvergenceSpec(StrictModel):
    resolutions: List[int] = Field(default_factory=lambda: [32, 64, 128, 256])
    cases: List[ConvergenceCaseName] = Field(
        default_factory=lambda: ["advection-sine", "burgers-shock", "burgers-rarefaction"]
    )
    min_order: float = Field(default=0.9, gt=0.0)

    @field_validator("resolutions")
    @classmethod
    def increasing(cls, v: List[int]) -> List[int]:
        if len(v) < 2 or any(b <= a for a, b in zip(v[:-1], v[1:])) or v[0] < 2:
            raise ValueError("resolutions must be at least two increasing cell counts >= 2")
        return v


class RunConfig(StrictModel):
    name: Optional[str] = None
    subcommand: Optional[Literal["solve", "trace", "verify", "convergence"]] = None
    model: ModelSpec
    domain: Optional[DomainSpec] = None
    foliation: Optional[FoliationSpec] = None
    oracle: Optional[OracleSpec] = None
    solver: Optional[SolverSpec] = None
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    trace: TraceSpec = Field(default_factory=TraceSpec)
    verify: VerifySpec = Field(default_factory=VerifySpec)
    convergence: ConvergenceSpec = Field(default_factory=ConvergenceSpec)
    output_dir: Optional[str] = None
    seed: int = Field(default=0, ge=0, le=2**64 - 1)

    @model_validator(mode="after")
    def consistent(self) -> "RunConfig":
        n = self.model.n
        if self.oracle is not None:
            for key in ("u_l", "u_r"):
                if len(getattr(self.oracle, key)) != _components(self.model):
                    raise ValueError(f"oracle.{key} needs {_components(self.model)} components")
            if self.oracle.normal is not None and len(self.oracle.normal) != n:
                raise ValueError(f"oracle.normal needs {n} components")
        if self.domain is not None:
            dim = 2 if self.domain.kind == "disk" else len(self.domain.lower)
            if dim != n:
                raise ValueError(f"domain dimension {dim} does not match model dimension {n}")
        if self.solver is not None:
            if len(self.solver.mesh.cells) != n:
                raise ValueError(f"solver.mesh needs {n} axes")
            if self.solver.init.kind == "oracle" and self.oracle is None:
                raise ValueError("solver.init.kind 'oracle' needs an 'oracle' section")
        if self.foliation is not None and self.domain is None:
            raise ValueError("a foliation needs a 'domain' to foliate")
        return self

    # -- builders ---------------------------------------------------------

    def build_model(self) -> SystemModel:
        return self.model.build()

    def build_domain(self) -> Domain:
        if self.domain is None:
            raise ConfigError("This run needs a 'domain' section", paths=["domain"])
        return self.domain.build()

    def build_oracle(self, model: Optional[SystemModel] = None) -> PlanarWeakSolution:
        if self.oracle is None:
            raise ConfigError("This run needs an 'oracle' section", paths=["oracle"])
        return self.oracle.riemann_data().solution(model or self.build_model())

    def build_foliation(self) -> BoundaryFoliation:
        if self.foliation is None:
            raise ConfigError("This run needs a 'foliation' section", paths=["foliation"])
        spec = self.foliation
        return foliate(self.build_domain(), spec.delta, spec.width, spec.count, spec.quadrature_order)

    def build_cylinder(self) -> Cylinder:
        domain = self.build_domain()
        if isinstance(domain, Disk):
            c, r = domain.center, domain.radius
            box = Box((c[0] - r, c[1] - r), (c[0] + r, c[1] + r))
        else:
            box = domain
        return Cylinder(box, self.verify.t1, self.verify.t2)

    def build_solver_config(self, model: Optional[SystemModel] = None) -> SolverConfig:
        if self.solver is None:
            raise ConfigError("This run needs a 'solver' section", paths=["solver"])
        spec = self.solver
        model = model or self.build_model()
        mesh = Mesh(Box(tuple(spec.mesh.lower), tuple(spec.mesh.upper)), tuple(spec.mesh.cells))
        init = spec.init
        if init.kind == "oracle":
            initial: Union[RiemannData, SineData] = self.oracle.riemann_data()
        elif init.kind == "riemann":
            normal = tuple(init.normal) if init.normal is not None else None
            initial = RiemannData(tuple(init.u_l), tuple(init.u_r), normal, init.offset)
        else:
            initial = SineData(tuple(init.base), tuple(init.amplitude), tuple(init.wavenumbers))
        return SolverConfig(model, mesh, spec.cfl, spec.t_end, spec.bc, initial)


def _components(spec: ModelSpec) -> int:
    return MODEL_REGISTRY[spec.name].D if spec.name == "shallow_water" else 1


def _error_paths(error: ValidationError) -> List[str]:
    return [".".join(str(part) for part in e["loc"]) or "<root>" for e in error.errors()]


def validate_config(data: dict) -> RunConfig:
    """Validate a decoded config document; errors carry dotted key paths"""
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        paths = _error_paths(e)
        details = "; ".join(f"{p}: {err['msg']}" for p, err in zip(paths, e.errors()))
        raise ConfigError(f"Invalid configuration: {details}", paths=paths) from e
    try:
        config.build_model()
        if config.domain is not None:
            config.build_domain()
        if config.oracle is not None:
            config.build_oracle()
        if config.foliation is not None:
            config.build_foliation()
        if config.solver is not None:
            config.build_solver_config()
    except ConfigError:
        raise
    except BalanceFluxError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
    return config


def parse_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    config = validate_config(data)
    logger.info(f"Loaded config {path} (digest {config_digest(config)[:12]})")
    return config


def config_digest(config: RunConfig) -> str:
    """sha256 of the canonical JSON of the config with defaults filled"""
    return stable_digest(config.model_dump(mode="json"))
