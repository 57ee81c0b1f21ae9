"""
Executable verdicts on balance laws and flux regularity.

Each check evaluates one or more cases and returns a VerificationReport.
Errors inside a case become failed entries; they never abort a suite.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import Claim, ConvergenceSpec, RunConfig, SectionSpec
from .exact import (
    Cylinder,
    OracleSampler,
    PlanarWeakSolution,
    exact_face_flux,
    instantaneous_flux,
    random_bump,
    weak_form_residual,
)
from .exceptions import PreconditionError
from .geometry import AxisFace, BoundaryFoliation, Box, Domain, Face, audit_foliation, axis_face
from .output import stable_digest
from .quadrature import stable_sum
from .solver import (
    PERIODIC,
    LedgerSampler,
    Mesh,
    RiemannData,
    SineData,
    SolverConfig,
    Trajectory,
    discrete_balance_residual,
    exact_cell_averages,
    run,
)
from .systems import Advection, Burgers
from .trace import (
    FluxSampler,
    analytic_lipschitz_bound,
    estimate_lipschitz,
    face_flux_profile,
    flux_trace,
    time_continuity_bound,
    time_modulus,
    trace_profile,
)

logger = logging.getLogger(__name__)

# errors at or below this level count as converged
ROUNDOFF_FLOOR = 1e-12
BOUND_SLACK = 1e-6
SURROGATE_NOTE = (
    "Lipschitz stabilization (bounded growth of the max first difference under "
    "doubling) is an empirical surrogate; no explicit constant is asserted."
)


class CaseResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    provenance: str
    metric: float
    tolerance: float
    passed: bool
    values: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None


class VerificationReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    claim: Claim
    inputs_digest: str
    cases: List[CaseResult]
    passed: bool
    runtime: float
    seed: Optional[int] = None
    notes: List[str] = Field(default_factory=list)

    @classmethod
    def assemble(
        cls,
        claim: str,
        inputs: Dict[str, Any],
        cases: List[CaseResult],
        started: float,
        seed: Optional[int] = None,
        notes: Sequence[str] = (),
    ) -> "VerificationReport":
        passed = bool(cases) and all(c.passed for c in cases)
        report = cls(
            claim=claim,
            inputs_digest=stable_digest(inputs),
            cases=cases,
            passed=passed,
            runtime=time.perf_counter() - started,
            seed=seed,
            notes=list(notes),
        )
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, f"Claim {claim}: {'PASS' if passed else 'FAIL'} ({len(cases)} cases, {report.runtime:.2f}s)")
        return report


def merge_reports(reports: Sequence[VerificationReport]) -> VerificationReport:
    """Combine reports of one claim into a single report"""
    if not reports:
        raise PreconditionError("Nothing to merge")
    claim = reports[0].claim
    if any(r.claim != claim for r in reports):
        raise PreconditionError("Only reports of the same claim can be merged")
    cases = [c for r in reports for c in r.cases]
    notes = list(dict.fromkeys(n for r in reports for n in r.notes))
    return VerificationReport(
        claim=claim,
        inputs_digest=stable_digest([r.inputs_digest for r in reports]),
        cases=cases,
        passed=bool(cases) and all(c.passed for c in cases),
        runtime=sum(r.runtime for r in reports),
        seed=reports[0].seed,
        notes=notes,
    )


def _floats(x) -> Any:
    return np.asarray(x, dtype=float).tolist()


def _guarded(name: str, provenance: str, tolerance: float, body: Callable[[], CaseResult]) -> CaseResult:
    try:
        return body()
    except Exception as e:
        logger.warning(f"Case {name} ({provenance}) failed with {type(e).__name__}: {e}")
        return CaseResult(
            name=name,
            provenance=provenance,
            metric=math.nan,
            tolerance=tolerance,
            passed=False,
            error=f"{type(e).__name__}: {e}",
        )


# -- balance -----------------------------------------------------------------


def _balance_case(sampler: FluxSampler, domain: Domain, t1: float, t2: float, tol: float, name: str) -> CaseResult:
    def body() -> CaseResult:
        m1 = sampler.mass(domain, t1, tol / 4)
        m2 = sampler.mass(domain, t2, tol / 4)
        h = flux_trace(sampler, domain.boundary_faces(), t1, t2, tol / 2)
        residual = np.abs(stable_sum([m2.value, -m1.value, h.value]))
        return CaseResult(
            name=name,
            provenance=sampler.provenance,
            metric=float(residual.max()),
            tolerance=tol,
            passed=bool(np.all(residual <= tol)),
            values={
                "mass_change": _floats(m2.value - m1.value),
                "outward_flux": _floats(h.value),
                "residual": _floats(residual),
                "error_estimate": m1.error + m2.error + h.error_estimate,
            },
        )

    return _guarded(name, sampler.provenance, tol, body)


def _foliation_case(foliation: BoundaryFoliation) -> CaseResult:
    audit = audit_foliation(foliation)
    return CaseResult(
        name="foliation geometry",
        provenance="geometry",
        metric=audit.closure_error,
        tolerance=ROUNDOFF_FLOOR,
        passed=audit.closure_error <= ROUNDOFF_FLOOR and audit.nested,
        values={"quadrature_order": foliation.quadrature_order, "nesting_violations": list(audit.nesting_violations)},
    )


def check_balance_exact(
    oracle: Union[PlanarWeakSolution, FluxSampler],
    domain: Domain,
    t1: float,
    t2: float,
    tol: float,
    foliation: Optional[BoundaryFoliation] = None,
) -> VerificationReport:
    """|m(t2) - m(t1) + h| on the domain and, if given, on every foliation leaf.

    A foliation also gets a geometry case: its leaves must be closed and nested.
    """
    started = time.perf_counter()
    sampler = _as_sampler(oracle)
    cases = [_balance_case(sampler, domain, t1, t2, tol, "domain")]
    if foliation is not None:
        cases.append(_guarded("foliation geometry", "geometry", ROUNDOFF_FLOOR, lambda: _foliation_case(foliation)))
        for rho in foliation.offsets:
            cases.append(_balance_case(sampler, foliation.domain_at(rho), t1, t2, tol, f"leaf rho={rho:.6g}"))
    inputs = {"domain": repr(domain), "t": [t1, t2], "tol": tol, "foliation": repr(foliation)}
    return VerificationReport.assemble("balance", inputs, cases, started)


def _as_sampler(source) -> FluxSampler:
    if isinstance(source, PlanarWeakSolution):
        return OracleSampler(source)
    if isinstance(source, Trajectory):
        return LedgerSampler(source)
    return source


# -- Lipschitz traces ----------------------------------------------------------


@dataclass(frozen=True)
class FaceSection:
    """+e_axis sections of ``box`` at positions spread over [lo, hi]"""

    box: Box
    axis: int
    lo: float
    hi: float

    @classmethod
    def from_spec(cls, box: Box, spec: SectionSpec) -> "FaceSection":
        return cls(box, spec.axis, spec.lo, spec.hi)

    def positions(self, K: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, K + 1)


def check_trace_lipschitz(
    source: Union[PlanarWeakSolution, Trajectory, FluxSampler],
    t1: float,
    t2: float,
    K_levels: Sequence[int],
    tol: float,
    foliation: Optional[BoundaryFoliation] = None,
    section: Optional[FaceSection] = None,
    exact_slope: Optional[float] = None,
    slope_tol: float = 1e-4,
    growth: float = 0.05,
) -> VerificationReport:
    """L-hat per refinement level, its stabilization and, when known, its limit"""
    started = time.perf_counter()
    if (foliation is None) == (section is None):
        raise PreconditionError("Give exactly one of a foliation or a face section")
    sampler = _as_sampler(source)
    provenance = sampler.provenance
    kind = "foliation" if foliation is not None else f"section axis {section.axis}"
    bound = None
    if foliation is not None:
        bound = analytic_lipschitz_bound(sampler, foliation)
    elif section.box.n == 1:
        lo, hi = sampler.state_range()
        bound = np.asarray(hi) - np.asarray(lo)

    levels: List[Tuple[int, float, float]] = []
    cases = []
    for K in K_levels:

        def body(K=K) -> CaseResult:
            if foliation is not None:
                profile = trace_profile(sampler, foliation, t1, t2, K, tol)
                spacing = (foliation.offset_range[1] - foliation.offset_range[0]) / K
            else:
                profile = face_flux_profile(sampler, section.box, section.axis, section.positions(K), t1, t2, tol)
                spacing = (section.hi - section.lo) / K
            report = estimate_lipschitz(profile, bound)
            noise = 2.0 * tol / spacing if spacing > 0.0 else 0.0
            levels.append((K, report.value, noise))
            within = bound is None or bool(np.all(report.estimate <= bound * (1.0 + BOUND_SLACK) + noise))
            return CaseResult(
                name=f"{kind} K={K}",
                provenance=provenance,
                metric=report.value,
                tolerance=float(np.max(bound)) if bound is not None else math.inf,
                passed=within,
                values={
                    "estimate": _floats(report.estimate),
                    "history": [[k, _floats(h)] for k, h in report.history],
                    "analytic_bound": _floats(bound) if bound is not None else None,
                    "profile": [[s.y, *_floats(s.value)] for s in profile.samples],
                },
            )

        cases.append(_guarded(f"{kind} K={K}", provenance, tol, body))

    levels.sort()
    growths = []
    for (ka, la, _), (kb, lb, noise) in zip(levels[:-1], levels[1:]):
        if ka >= 32:
            growths.append(lb <= (1.0 + growth) * la + noise)
    cases.append(
        CaseResult(
            name=f"{kind} stabilization",
            provenance=provenance,
            metric=levels[-1][1] if levels else math.nan,
            tolerance=growth,
            passed=len(levels) == len(K_levels) and all(growths),
            values={"levels": [[k, l] for k, l, _ in levels], "pairs_checked": len(growths)},
        )
    )
    if exact_slope is not None and levels:
        deviation = abs(levels[-1][1] - exact_slope)
        cases.append(
            CaseResult(
                name=f"{kind} limit",
                provenance=provenance,
                metric=deviation,
                tolerance=slope_tol,
                passed=deviation <= slope_tol,
                values={"estimate": levels[-1][1], "exact_slope": exact_slope},
            )
        )
    inputs = {"t": [t1, t2], "K": list(K_levels), "tol": tol, "kind": kind, "provenance": provenance}
    return VerificationReport.assemble("lipschitz-trace", inputs, cases, started, notes=[SURROGATE_NOTE])


# -- time continuity ---------------------------------------------------------


def _time_case(sampler: FluxSampler, boundary: Sequence[Face], t_grid: Sequence[float], tol: float, name: str) -> CaseResult:
    def body() -> CaseResult:
        increments = time_modulus(sampler, boundary, t_grid[0], t_grid, tol)
        bound = time_continuity_bound(sampler, boundary)
        worst, ok = 0.0, True
        ratios = []
        for inc in increments:
            ratio = inc.ratio
            slack = tol / inc.dt if inc.dt > 0.0 else 0.0
            ok = ok and bool(np.all(ratio <= bound * (1.0 + BOUND_SLACK) + slack))
            worst = max(worst, float(np.max(ratio)) if ratio.size else 0.0)
            ratios.append([inc.dt, *_floats(inc.dh)])
        return CaseResult(
            name=name,
            provenance=sampler.provenance,
            metric=worst,
            tolerance=float(np.max(bound)),
            passed=ok,
            values={"bound": _floats(bound), "increments": ratios},
        )

    return _guarded(name, sampler.provenance, tol, body)


def check_time_continuity(
    sampler: Union[PlanarWeakSolution, Trajectory, FluxSampler],
    boundary: Sequence[Face],
    t_grid: Sequence[float],
    tol: float,
    name: str = "boundary",
) -> VerificationReport:
    """max |dh|/dt against sum over faces of sup |f(u)·nu| * |face|"""
    started = time.perf_counter()
    sampler = _as_sampler(sampler)
    cases = [_time_case(sampler, boundary, t_grid, tol, name)]
    inputs = {"boundary": [repr(f) for f in boundary], "t_grid": list(t_grid), "tol": tol}
    return VerificationReport.assemble("time-continuity", inputs, cases, started)


def check_instantaneous_jump(
    sol: PlanarWeakSolution, point: Sequence[float], normal: Sequence[float], t: float, threshold: float = 0.4
) -> CaseResult:
    """One-sided samples of f(u)·nu around a shock crossing differ by >= threshold"""
    name = f"instantaneous jump at t={t}"

    def body() -> CaseResult:
        eps = 1e-9 * max(1.0, t)
        before = instantaneous_flux(sol, point, normal, t - eps)
        after = instantaneous_flux(sol, point, normal, t + eps)
        jump = float(np.max(np.abs(after - before)))
        return CaseResult(
            name=name,
            provenance="quadrature",
            metric=jump,
            tolerance=threshold,
            passed=jump >= threshold,
            values={"before": _floats(before), "after": _floats(after)},
        )

    return _guarded(name, "quadrature", threshold, body)


# -- weak form -----------------------------------------------------------------


def check_weak_form(
    sol: PlanarWeakSolution, cylinder: Cylinder, trials: int, seed: int = 0, tol: float = 1e-6
) -> VerificationReport:
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(trials):
        phi = random_bump(rng, cylinder, sol.model.D)

        def body(phi=phi, k=k) -> CaseResult:
            residual = weak_form_residual(sol, phi, cylinder)
            return CaseResult(
                name=f"trial {k}",
                provenance="quadrature",
                metric=residual,
                tolerance=tol,
                passed=residual <= tol,
                values={"center": list(phi.center), "radii": list(phi.radii), "t_center": phi.t_center},
            )

        cases.append(_guarded(f"trial {k}", "quadrature", tol, body))
    inputs = {"cylinder": repr(cylinder), "trials": trials, "tol": tol, "entropy": sol.entropy}
    return VerificationReport.assemble("weak-form", inputs, cases, started, seed=seed)


# -- box corollary -----------------------------------------------------------


def check_box_corollary(
    sampler: Union[PlanarWeakSolution, Trajectory, FluxSampler], box: Box, t1: float, t2: float, tol: float
) -> VerificationReport:
    """m(t2) - m(t1) + sum_j [F^j(b_j) - F^j(a_j)] = 0 with +e_j oriented sections"""
    started = time.perf_counter()
    sampler = _as_sampler(sampler)

    def body() -> CaseResult:
        face_tol = tol / (4 * box.n)
        m1 = sampler.mass(box, t1, tol / 4)
        m2 = sampler.mass(box, t2, tol / 4)
        parts, profile = [m2.value, -m1.value], {}
        for j in range(box.n):
            upper = sampler.face_flux(axis_face(box, j, box.upper[j], 1), t1, t2, face_tol).value
            lower = sampler.face_flux(axis_face(box, j, box.lower[j], 1), t1, t2, face_tol).value
            parts += [upper, -lower]
            profile[f"F{j}"] = [_floats(lower), _floats(upper)]
        residual = np.abs(stable_sum(parts))
        scale = max(1.0, float(np.sum([np.abs(p) for p in parts])))
        return CaseResult(
            name=repr(box),
            provenance=sampler.provenance,
            metric=float(residual.max()),
            tolerance=tol * scale,
            passed=bool(np.all(residual <= tol * scale)),
            values={"residual": _floats(residual), "sections": profile},
        )

    cases = [_guarded(repr(box), sampler.provenance, tol, body)]
    inputs = {"box": repr(box), "t": [t1, t2], "tol": tol, "provenance": sampler.provenance}
    return VerificationReport.assemble("corollary-box", inputs, cases, started)


# -- flux divergence -----------------------------------------------------------


def check_flux_divergence(
    sol: PlanarWeakSolution,
    centers: Sequence[Sequence[float]],
    sizes: Sequence[float],
    t1: float,
    t2: float,
    tol: float,
) -> VerificationReport:
    """(1/|B|) * outward flux of g over shrinking boxes stays within osc(u)"""
    started = time.perf_counter()
    sampler = OracleSampler(sol)
    lo, hi = sampler.state_range()
    osc = np.asarray(hi) - np.asarray(lo)
    cases = []
    for center in centers:
        for size in sizes:
            name = f"center={list(center)} size={size}"

            def body(center=center, size=size, name=name) -> CaseResult:
                c = np.asarray(center, dtype=float)
                box = Box(tuple(c - 0.5 * size), tuple(c + 0.5 * size))
                h = flux_trace(sampler, box.boundary_faces(), t1, t2, tol)
                divergence = np.abs(h.value) / box.measure
                limit = osc * (1.0 + BOUND_SLACK) + tol / box.measure
                return CaseResult(
                    name=name,
                    provenance=sampler.provenance,
                    metric=float(divergence.max()),
                    tolerance=float(np.max(limit)),
                    passed=bool(np.all(divergence <= limit)),
                    values={"divergence": _floats(divergence), "oscillation": _floats(osc)},
                )

            cases.append(_guarded(name, sampler.provenance, tol, body))
    inputs = {"centers": [list(c) for c in centers], "sizes": list(sizes), "t": [t1, t2], "tol": tol}
    return VerificationReport.assemble("flux-divergence", inputs, cases, started)


# -- discrete balance ------------------------------------------------------------


def _random_union(rng: np.random.Generator, cells: Tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(cells, dtype=bool)
    if rng.random() < 0.5:
        index = []
        for n in cells:
            a = int(rng.integers(0, n))
            b = int(rng.integers(a + 1, n + 1))
            index.append(slice(a, b))
        mask[tuple(index)] = True
    else:
        count = int(rng.integers(1, min(20, int(np.prod(cells))) + 1))
        flat = rng.choice(int(np.prod(cells)), size=count, replace=False)
        mask.reshape(-1)[flat] = True
    return mask


def check_discrete_balance(trajectory: Trajectory, unions: int, seed: int = 0, tol: float = 1e-12) -> VerificationReport:
    """Relative discrete balance residual over random cell unions and checkpoint pairs"""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    times = trajectory.times
    cases = []

    def whole_domain() -> CaseResult:
        mask = np.ones(trajectory.mesh.cells, dtype=bool)
        residual = np.abs(discrete_balance_residual(trajectory, mask, (times[0], times[-1]), relative=True))
        return CaseResult(
            name="whole domain",
            provenance="solver-ledger",
            metric=float(residual.max()),
            tolerance=tol,
            passed=bool(np.all(residual <= tol)),
        )

    def random_unions() -> CaseResult:
        worst, worst_case = 0.0, None
        for _ in range(unions):
            a, b = sorted(rng.choice(len(times), size=2, replace=len(times) < 2))
            mask = _random_union(rng, trajectory.mesh.cells)
            residual = float(np.max(np.abs(discrete_balance_residual(trajectory, mask, (times[a], times[b]), True))))
            if residual >= worst:
                worst, worst_case = residual, {"cells": int(mask.sum()), "pair": [times[a], times[b]]}
        return CaseResult(
            name="random unions",
            provenance="solver-ledger",
            metric=worst,
            tolerance=tol,
            passed=worst <= tol,
            values={"unions": unions, "worst": worst_case},
        )

    cases.append(_guarded("whole domain", "solver-ledger", tol, whole_domain))
    cases.append(_guarded("random unions", "solver-ledger", tol, random_unions))
    inputs = {"mesh": list(trajectory.mesh.cells), "times": list(times), "unions": unions, "tol": tol}
    return VerificationReport.assemble("discrete-balance", inputs, cases, started, seed=seed)


# -- convergence -----------------------------------------------------------------


class ConvergenceRow(BaseModel):
    case: str
    N: int
    error: float
    order: Optional[float] = None


# face position, domain, exact flux over [0, 1] for the Burgers flux cases
BURGERS_FLUX_CASES = {
    "burgers-shock": ((1.0,), (0.0,), 0.25, (-0.5, 1.5), 0.25),
    "burgers-rarefaction": ((0.0,), (1.0,), 0.25, (-0.5, 1.5), 0.21875),
}


def _orders(errors: Sequence[float], resolutions: Sequence[int]) -> List[Optional[float]]:
    orders: List[Optional[float]] = [None]
    for (ea, na), (eb, nb) in zip(zip(errors[:-1], resolutions[:-1]), zip(errors[1:], resolutions[1:])):
        if ea > ROUNDOFF_FLOOR and eb > ROUNDOFF_FLOOR:
            orders.append(math.log(ea / eb) / math.log(nb / na))
        else:
            orders.append(None)
    return orders


def errors_decrease(errors: Sequence[float], resolutions: Sequence[int], coarsest: int = 64) -> bool:
    """Strict decrease between refinements from ``coarsest`` cells on, except for errors at roundoff"""
    return all(
        eb < ea or max(ea, eb) <= ROUNDOFF_FLOOR
        for (na, ea), eb in zip(zip(resolutions[:-1], errors[:-1]), errors[1:])
        if na >= coarsest
    )


def _advection_errors(resolutions: Sequence[int], cfl: float) -> List[float]:
    errors = []
    for N in resolutions:
        config = SolverConfig(
            Advection((1.0,)), Mesh(Box((0.0,), (1.0,)), (N,)), cfl, 1.0, PERIODIC, SineData((0.0,), (1.0,), (1,))
        )
        trajectory = run(config)
        computed = trajectory.field_at(1.0).values
        exact = exact_cell_averages(config, 1.0)
        errors.append(float(np.sum(np.abs(computed - exact)) * config.mesh.spacing[0]))
    return errors


def _burgers_flux_errors(case: str, resolutions: Sequence[int], cfl: float, tol: float) -> Tuple[List[float], float]:
    u_l, u_r, position, (a, b), expected = BURGERS_FLUX_CASES[case]
    data = RiemannData(u_l, u_r)
    model = Burgers(1)
    reference = float(exact_face_flux(data.solution(model), AxisFace(0, position, ()), 0.0, 1.0, tol)[0])
    errors = []
    for N in resolutions:
        config = SolverConfig(model, Mesh(Box((a,), (b,)), (N,)), cfl, 1.0, "outflow", data)
        ledger = LedgerSampler(run(config))
        value = float(ledger.face_flux(AxisFace(0, position, ()), 0.0, 1.0).value[0])
        errors.append(abs(value - reference))
    logger.debug(f"{case}: reference flux {reference!r} (closed form {expected!r})")
    return errors, reference


def convergence_study(
    spec: Optional[ConvergenceSpec] = None, cfl: float = 0.45, tol: float = 1e-10
) -> Tuple[VerificationReport, List[ConvergenceRow]]:
    """Ledger-vs-exact flux errors and field L1 errors under mesh refinement"""
    started = time.perf_counter()
    spec = spec or ConvergenceSpec()
    resolutions = list(spec.resolutions)
    rows: List[ConvergenceRow] = []
    cases = []
    for case in spec.cases:

        def body(case=case) -> CaseResult:
            if case == "advection-sine":
                errors = _advection_errors(resolutions, cfl)
                extra: Dict[str, Any] = {}
            else:
                errors, reference = _burgers_flux_errors(case, resolutions, cfl, tol)
                extra = {"reference_flux": reference}
            orders = _orders(errors, resolutions)
            for N, e, p in zip(resolutions, errors, orders):
                rows.append(ConvergenceRow(case=case, N=N, error=e, order=p))
                logger.info(f"{case} N={N}: error={e:.3e}" + (f" order={p:.3f}" if p is not None else ""))
            if case == "advection-sine":
                finest = orders[-1]
                metric = finest if finest is not None else math.nan
                passed = finest is not None and finest >= spec.min_order
                tolerance = spec.min_order
            else:
                metric, tolerance = errors[-1], ROUNDOFF_FLOOR
                passed = errors_decrease(errors, resolutions)
            return CaseResult(
                name=case,
                provenance="solver-ledger",
                metric=metric,
                tolerance=tolerance,
                passed=passed,
                values={"resolutions": resolutions, "errors": errors, "orders": orders, **extra},
            )

        cases.append(_guarded(case, "solver-ledger", spec.min_order, body))
    inputs = {"spec": spec.model_dump(mode="json"), "cfl": cfl, "tol": tol}
    return VerificationReport.assemble("convergence", inputs, cases, started), rows


# -- suite -------------------------------------------------------------------------


def applicable_claims(config: RunConfig) -> List[str]:
    has_oracle = config.oracle is not None and config.domain is not None
    box_domain = config.domain is not None and config.domain.kind == "box"
    v = config.verify
    claims = []
    if has_oracle:
        claims += ["balance", "time-continuity", "weak-form"]
    if (has_oracle and (config.foliation is not None or v.section is not None)) or (
        config.solver is not None and v.section is not None and box_domain
    ):
        claims.append("lipschitz-trace")
    if box_domain and (has_oracle or config.solver is not None):
        claims.append("corollary-box")
    if config.oracle is not None and v.divergence is not None:
        claims.append("flux-divergence")
    if config.solver is not None:
        claims.append("discrete-balance")
    return claims


def resolve_t_grid(config: RunConfig) -> List[float]:
    """The configured time grid, or 11 equispaced times on [t1, t2]"""
    v = config.verify
    if v.t_grid:
        return [float(t) for t in v.t_grid]
    return [float(t) for t in np.linspace(v.t1, v.t2, 11)]


def _solver_trajectory(config: RunConfig, model, t_grid: Sequence[float]) -> Optional[Trajectory]:
    if config.solver is None:
        return None
    v = config.verify
    t_end = config.solver.t_end
    wanted = set(config.solver.checkpoints) | {v.t1, v.t2} | set(t_grid)
    checkpoints = sorted(t for t in wanted if 0.0 < t <= t_end)
    return run(config.build_solver_config(model), checkpoints)


def _failed_report(claim: str, error: Exception, started: float) -> VerificationReport:
    case = CaseResult(
        name="setup", provenance="n/a", metric=math.nan, tolerance=math.nan, passed=False,
        error=f"{type(error).__name__}: {error}",
    )
    return VerificationReport.assemble(claim, {"claim": claim}, [case], started)


def run_suite(config: RunConfig) -> List[VerificationReport]:
    """Evaluate every enabled claim; a failing claim never stops the others"""
    v = config.verify
    claims = list(v.checks) if v.checks is not None else applicable_claims(config)
    logger.info(f"Verifying claims: {', '.join(claims)}")
    model = config.build_model()
    oracle = config.build_oracle(model) if config.oracle is not None else None
    domain = config.build_domain() if config.domain is not None else None
    needs_solver = {"discrete-balance", "corollary-box", "lipschitz-trace", "time-continuity"} & set(claims)
    t_grid = resolve_t_grid(config)
    trajectory = None
    if needs_solver and config.solver is not None:
        trajectory = _solver_trajectory(config, model, t_grid)

    reports = []
    for claim in claims:
        started = time.perf_counter()
        try:
            reports.append(_run_claim(claim, config, model, oracle, domain, trajectory, t_grid))
        except Exception as e:
            logger.warning(f"Claim {claim} could not be evaluated: {e}")
            reports.append(_failed_report(claim, e, started))
    return reports


def _run_claim(claim, config: RunConfig, model, oracle, domain, trajectory, t_grid) -> VerificationReport:
    v, tols = config.verify, config.tolerances
    parts: List[VerificationReport] = []
    ledger_times = set(trajectory.times) if trajectory is not None else set()

    if claim == "balance":
        foliation = config.build_foliation() if config.foliation is not None else None
        return check_balance_exact(_require(oracle, "oracle"), _require(domain, "domain"), v.t1, v.t2, tols.tol, foliation)

    if claim == "lipschitz-trace":
        if oracle is not None and config.foliation is not None:
            parts.append(
                check_trace_lipschitz(
                    oracle, v.t1, v.t2, v.K_levels, tols.tol, foliation=config.build_foliation(),
                    growth=tols.lipschitz_growth,
                )
            )
        if v.section is not None and isinstance(domain, Box):
            section = FaceSection.from_spec(domain, v.section)
            if oracle is not None:
                parts.append(
                    check_trace_lipschitz(
                        oracle, v.t1, v.t2, v.K_levels, tols.tol, section=section, exact_slope=v.exact_slope,
                        slope_tol=tols.lipschitz_slope_tol, growth=tols.lipschitz_growth,
                    )
                )
            if trajectory is not None:
                parts.append(
                    check_trace_lipschitz(
                        trajectory, v.t1, v.t2, v.K_levels, tols.tol, section=section, exact_slope=v.exact_slope,
                        slope_tol=tols.ledger_slope_tol, growth=tols.lipschitz_growth,
                    )
                )
        return merge_reports(_require(parts or None, "foliation or verify.section"))

    if claim == "time-continuity":
        boundary = _require(domain, "domain").boundary_faces()
        if oracle is not None:
            report = check_time_continuity(oracle, boundary, t_grid, tols.tol)
            if v.probe is not None:
                p = v.probe
                report.cases.append(check_instantaneous_jump(oracle, p.point, p.normal, p.t, p.threshold))
                report.passed = all(c.passed for c in report.cases)
            parts.append(report)
        if trajectory is not None and isinstance(domain, Box):
            missing = sorted(set(t_grid) - ledger_times)
            if missing:
                logger.warning(f"Skipping ledger time continuity: no checkpoints at t={missing}")
            else:
                parts.append(check_time_continuity(trajectory, boundary, t_grid, tols.tol, name="boundary (ledger)"))
        return merge_reports(_require(parts or None, "oracle"))

    if claim == "corollary-box":
        box = domain if isinstance(domain, Box) else None
        _require(box, "box domain")
        if oracle is not None:
            parts.append(check_box_corollary(oracle, box, v.t1, v.t2, tols.tol))
        if trajectory is not None:
            parts.append(check_box_corollary(trajectory, box, v.t1, v.t2, tols.discrete_balance_tol))
        return merge_reports(_require(parts or None, "oracle or solver"))

    if claim == "weak-form":
        return check_weak_form(_require(oracle, "oracle"), config.build_cylinder(), v.trials, config.seed, tols.weak_form_tol)

    if claim == "flux-divergence":
        spec = _require(v.divergence, "verify.divergence")
        return check_flux_divergence(_require(oracle, "oracle"), spec.centers, spec.sizes, v.t1, v.t2, tols.tol)

    if claim == "discrete-balance":
        return check_discrete_balance(_require(trajectory, "solver"), v.unions, config.seed, tols.discrete_balance_tol)

    if claim == "convergence":
        cfl = config.solver.cfl if config.solver is not None else 0.45
        report, _ = convergence_study(config.convergence, cfl, tols.quadrature_tol)
        return report

    raise PreconditionError(f"Unknown claim '{claim}'")


def _require(value, what: str):
    if value is None:
        raise PreconditionError(f"This check needs {what} in the configuration")
    return value
