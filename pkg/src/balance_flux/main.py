"""
balance-flux command line: solve, trace, verify and convergence runs driven
by a JSON config.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, config_digest, parse_config
from .exact import OracleSampler
from .exceptions import BalanceFluxError, ConfigError
from .output import OutputHeader, write_csv, write_json
from .settings import get_settings
from .solver import LedgerSampler, Trajectory, run
from .trace import TraceProfile, face_flux_profile, trace_profile
from .verify import FaceSection, convergence_study, run_suite

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
SUBCOMMANDS = {
    "solve": "Run the finite-volume solver and write cell fields and the flux ledger",
    "trace": "Write the flux trace profile across a foliation or a family of sections",
    "verify": "Evaluate the configured claims and write a JSON report and CSV summary",
    "convergence": "Run the mesh refinement study and write the convergence table",
}


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler()],
        force=True,
    )


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="balance-flux", description="Verify balance laws and flux traces of hyperbolic conservation laws"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, text in SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=text, description=text)
        sub.add_argument("--config", type=Path, required=True, help="Path to the JSON run config")
        sub.add_argument("--out", type=Path, default=None, help="Output directory (default from config or settings)")
        sub.add_argument("--seed", type=_seed, default=None, help="Override the config seed")
        sub.add_argument(
            "--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level"
        )
    return parser


# -- subcommands ---------------------------------------------------------------


def _header(config: RunConfig) -> OutputHeader:
    return OutputHeader(config_digest(config), config.seed)


def _solve(config: RunConfig, out: Path) -> int:
    model = config.build_model()
    solver_config = config.build_solver_config(model)
    trajectory = run(solver_config, config.solver.checkpoints)
    header = _header(config)
    mesh = trajectory.mesh
    D = model.D
    x_cols = [f"x{j + 1}" for j in range(mesh.n)]
    u_cols = [f"u_{i + 1}" for i in range(D)]
    grids = np.meshgrid(*[mesh.centers(j) for j in range(mesh.n)], indexing="ij")
    centers = np.stack([g.reshape(-1) for g in grids], axis=-1)

    final = trajectory.checkpoints[-1].field
    write_csv(out / "cells.csv", header, x_cols + u_cols, _cell_rows(centers, final.values.reshape(-1, D)))
    snapshot_rows = []
    for checkpoint in trajectory.checkpoints:
        for row in _cell_rows(centers, checkpoint.field.values.reshape(-1, D)):
            snapshot_rows.append([checkpoint.t, *row])
    write_csv(out / "snapshots.csv", header, ["t"] + x_cols + u_cols, snapshot_rows)
    write_csv(out / "ledger.csv", header, ["axis", "face_index", "position", "t1", "t2"] + [f"F_{i + 1}" for i in range(D)], _ledger_rows(trajectory))
    write_json(out / "metrics.json", header, {"metrics": trajectory.metrics.get_metrics(), "times": list(trajectory.times)})
    logger.info(f"Wrote solver outputs to {out}")
    return 0


def _cell_rows(centers: np.ndarray, values: np.ndarray) -> List[list]:
    return [[*map(float, x), *map(float, u)] for x, u in zip(centers, values)]


def _ledger_rows(trajectory: Trajectory) -> List[list]:
    rows = []
    mesh = trajectory.mesh
    checkpoints = trajectory.checkpoints
    for previous, current in zip(checkpoints[:-1], checkpoints[1:]):
        for axis, faces in enumerate(current.segment.faces):
            positions = mesh.edges(axis)
            for flat, index in enumerate(np.ndindex(*faces.shape[:-1])):
                rows.append([axis, flat, float(positions[index[axis]]), previous.t, current.t, *map(float, faces[index])])
    return rows


def _trace(config: RunConfig, out: Path) -> int:
    spec = config.trace
    tol = config.tolerances.tol
    model = config.build_model()
    if spec.source == "solver":
        if spec.section is None or config.solver is None:
            raise ConfigError("Ledger traces need 'trace.section' and a 'solver' section", paths=["trace.section"])
        checkpoints = sorted({t for t in (spec.t1, spec.t2, *config.solver.checkpoints) if t > 0.0})
        sampler = LedgerSampler(run(config.build_solver_config(model), checkpoints))
    else:
        sampler = OracleSampler(config.build_oracle(model))

    if spec.section is not None:
        section = FaceSection.from_spec(config.build_domain(), spec.section)
        profile = face_flux_profile(sampler, section.box, section.axis, section.positions(spec.K), spec.t1, spec.t2, tol)
    else:
        profile = trace_profile(sampler, config.build_foliation(), spec.t1, spec.t2, spec.K, tol)
    columns = ["y", "t1", "t2"] + [f"h_{i + 1}" for i in range(model.D)] + ["error_estimate"]
    write_csv(out / "trace.csv", _header(config), columns, _trace_rows(profile))
    logger.info(f"Wrote {len(profile.samples)} trace samples to {out / 'trace.csv'}")
    return 0


def _trace_rows(profile: TraceProfile) -> List[list]:
    return [[s.y, s.t1, s.t2, *map(float, s.value), s.error_estimate] for s in profile.samples]


def _verify(config: RunConfig, out: Path) -> int:
    reports = run_suite(config)
    passed = all(r.passed for r in reports)
    header = _header(config)
    write_json(out / "report.json", header, {"passed": passed, "reports": [r.model_dump(mode="json") for r in reports]})
    rows = []
    for report in reports:
        for case in report.cases:
            rows.append([report.claim, case.name, case.provenance, case.metric, case.tolerance, case.passed])
    write_csv(out / "summary.csv", header, ["claim", "case", "provenance", "metric", "tolerance", "passed"], rows)
    failed = [r.claim for r in reports if not r.passed]
    if failed:
        logger.error(f"Verification failed for: {', '.join(failed)}")
        return 1
    logger.info(f"All {len(reports)} claims passed")
    return 0


def _convergence(config: RunConfig, out: Path) -> int:
    cfl = config.solver.cfl if config.solver is not None else get_settings().solver.cfl
    report, rows = convergence_study(config.convergence, cfl, config.tolerances.quadrature_tol)
    header = _header(config)
    write_csv(out / "convergence.csv", header, ["case", "N", "error", "order"], [[r.case, r.N, r.error, r.order] for r in rows])
    write_json(out / "convergence.json", header, report.model_dump(mode="json"))
    if not report.passed:
        logger.error("Convergence study failed")
        return 1
    return 0


HANDLERS = {"solve": _solve, "trace": _trace, "verify": _verify, "convergence": _convergence}


def dispatch(config: RunConfig, subcommand: str, out: Path) -> int:
    """Run one subcommand; returns the process exit code"""
    if config.subcommand is not None and config.subcommand != subcommand:
        logger.warning(f"Config is meant for '{config.subcommand}' but running '{subcommand}'")
    return HANDLERS[subcommand](config, Path(out))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging(args.log_level or settings.output.log_level)
    try:
        config = parse_config(args.config)
        if args.seed is not None:
            config = config.model_copy(update={"seed": args.seed})
        out = args.out or Path(config.output_dir or settings.output.out_dir)
        return dispatch(config, args.subcommand, out)
    except (BalanceFluxError, OSError) as e:
        logger.error(f"{args.subcommand} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
