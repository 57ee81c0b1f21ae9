import json
from pathlib import Path

import pytest

from balance_flux.config import config_digest, parse_config, validate_config
from balance_flux.exceptions import ConfigError

CONFIG_FILES = sorted((Path(__file__).resolve().parent.parent / "config").glob("*.json"))


def _minimal(**extra) -> dict:
    data = {"model": {"name": "burgers"}, "domain": {"lower": [0.0], "upper": [1.0]}, "oracle": {"u_l": [1.0], "u_r": [0.0]}}
    data.update(extra)
    return data


@pytest.mark.parametrize("path", CONFIG_FILES, ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    config = parse_config(path)
    assert config.name
    assert config.subcommand in ("verify", "convergence")


def test_shipped_configs_exist():
    assert len(CONFIG_FILES) >= 8


@pytest.mark.parametrize(
    "data, path",
    [
        (_minimal(bogus=1), "bogus"),
        ({**_minimal(), "model": {"name": "burgers", "colour": "red"}}, "model.colour"),
        (_minimal(verify={"K_levels": [2, 4, 6]}), "verify.K_levels"),
        (_minimal(solver={"mesh": {"lower": [0.0], "upper": [1.0], "cells": [8]}, "t_end": 1.0, "cfl": 1.5}), "solver.cfl"),
        (_minimal(seed=-1), "seed"),
    ],
)
def test_invalid_keys_are_reported_with_paths(data, path):
    with pytest.raises(ConfigError) as exc_info:
        validate_config(data)
    assert path in exc_info.value.paths


def test_unknown_model_lists_close_names():
    with pytest.raises(ConfigError) as exc_info:
        validate_config({"model": {"name": "burger"}})
    assert exc_info.value.paths == ["model.name"]
    assert "burgers" in str(exc_info.value)


@pytest.mark.parametrize(
    "data",
    [
        _minimal(model={"name": "burgers", "n": 2}),
        _minimal(model={"name": "shallow_water"}),
        {"model": {"name": "burgers"}, "foliation": {"delta": 0.5, "width": 0.1}},
        _minimal(solver={"mesh": {"lower": [0.0], "upper": [1.0], "cells": [8]}, "t_end": 1.0, "checkpoints": [2.0]}),
        _minimal(model={"name": "advection", "velocity": [1.0, 0.0]}),
        _minimal(verify={"t1": 0.5, "t2": 0.5}),
    ],
)
def test_inconsistent_sections_rejected(data):
    with pytest.raises(ConfigError):
        validate_config(data)


def test_builder_errors_become_config_errors():
    """shallow_water has no non-entropy Riemann solutions"""
    data = {"model": {"name": "shallow_water"}, "oracle": {"u_l": [2.0, 0.0], "u_r": [1.0, 0.0], "entropy": False}}
    with pytest.raises(ConfigError):
        validate_config(data)


def test_oracle_normal_is_normalized():
    config = validate_config({"model": {"name": "burgers", "n": 2}, "oracle": {"u_l": [1.0], "u_r": [0.0], "normal": [3.0, 4.0]}})
    assert config.oracle.normal == pytest.approx([0.6, 0.8])


def test_digest_is_stable_and_fills_defaults():
    explicit = _minimal(model={"name": "burgers", "n": 1}, seed=0)
    assert config_digest(validate_config(_minimal())) == config_digest(validate_config(explicit))
    assert config_digest(validate_config(_minimal())) != config_digest(validate_config(_minimal(seed=1)))


def test_tolerance_defaults_come_from_environment(monkeypatch):
    monkeypatch.setenv("BALANCE_FLUX_TOL", "1e-7")
    config = validate_config(_minimal())
    assert config.tolerances.tol == 1e-7
    assert config.tolerances.discrete_balance_tol == 1e-12


def test_config_is_frozen():
    config = validate_config(_minimal())
    with pytest.raises(Exception):
        config.seed = 3


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(broken)
    listing = tmp_path / "list.json"
    listing.write_text(json.dumps([1, 2]), encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(listing)


def test_build_solver_config_from_oracle(config_data):
    config = validate_config(config_data("burgers_shock_1d.json"))
    solver = config.build_solver_config()
    assert solver.mesh.cells == (256,)
    assert solver.initial.u_l == (1.0,)
    assert config.build_cylinder().box.lower == (0.0,)


def test_disk_cylinder_is_bounding_box(config_data):
    config = validate_config(config_data("burgers_oblique_disk.json"))
    cylinder = config.build_cylinder()
    assert cylinder.box.lower == (-1.0, -1.0)
    assert cylinder.box.upper == (1.0, 1.0)
    assert (cylinder.t1, cylinder.t2) == (0.0, 0.5)
