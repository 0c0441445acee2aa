import json

import numpy as np
import pytest

from peakon_toda.errors import ConfigError
from peakon_toda.models import (
    GridSpec,
    IntegratorConfig,
    RuntimeSettings,
    apply_overrides,
    build_config,
    build_state,
    config_echo,
    load_config,
    max_step_or_inf,
)
from peakon_toda.states import SectorKind

EXPLICIT = {"n": 2, "initial": {"q": [-1.0, 1.0], "p": [1.0, 1.0]}}


def test_defaults():
    cfg = build_config(EXPLICIT)
    assert cfg.solver == "ode"
    assert cfg.integrator.rel_tol == 1e-10
    assert cfg.t_end == 10.0
    assert cfg.sector.tag == "S_minus"
    assert max_step_or_inf(cfg.integrator) == float("inf")


def test_q_length_mismatch_names_field():
    with pytest.raises(ConfigError) as info:
        build_config({"n": 3, "initial": {"q": [0.0, 1.0], "p": [1.0, 1.0, 1.0]}})
    assert info.value.field == "initial.q"
    assert "initial.q" in str(info.value)


def test_generator_needs_seed():
    with pytest.raises(ConfigError) as info:
        build_config({"n": 3, "initial": {"generator": "random"}})
    assert info.value.field == "seed"


def test_field_level_errors():
    with pytest.raises(ConfigError) as info:
        build_config({**EXPLICIT, "integrator": {"rel_tol": -1.0}})
    assert info.value.field == "integrator.rel_tol"
    with pytest.raises(ConfigError):
        build_config({"n": 2, "initial": {}})
    with pytest.raises(ConfigError):
        build_config({**EXPLICIT, "sector": {"tag": "S_plus_perm"}})
    with pytest.raises(ConfigError):
        build_config({**EXPLICIT, "sector": {"tag": "S_minus"}, "flow_sign": "plus"})


def test_load_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({**EXPLICIT, "sector": {"tag": "S_minus"}}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.n == 2
    assert config_echo(cfg)["initial"]["q"] == [-1.0, 1.0]

    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "missing.json")
    assert info.value.field == "config"


def test_overrides_revalidate():
    cfg = build_config(EXPLICIT)
    updated = apply_overrides(cfg, {"integrator": {"t_end": 25.0}, "solver": "both"})
    assert updated.t_end == 25.0
    assert updated.solver == "both"
    assert updated.integrator.rel_tol == cfg.integrator.rel_tol
    with pytest.raises(ConfigError):
        apply_overrides(cfg, {"n": 3})


def test_build_state_geometric():
    cfg = build_config({
        "n": 3, "seed": 0, "sector": {"tag": "S_plus"},
        "initial": {"generator": "geometric", "C": 2.0, "r": 0.5, "d": 1.0},
    })
    s = build_state(cfg)
    assert s.sector.kind is SectorKind.S_PLUS
    np.testing.assert_allclose(s.p, [1.0, 0.5, 0.25])


def test_build_state_random_is_reproducible():
    data = {"n": 4, "seed": 11, "initial": {"generator": "random"}}
    a, b = build_state(build_config(data)), build_state(build_config(data))
    np.testing.assert_array_equal(a.q, b.q)


def test_build_state_permuted():
    cfg = build_config({**EXPLICIT, "sector": {"tag": "S_minus_perm", "permutation": [2, 1]},
                        "initial": {"q": [1.0, -1.0], "p": [1.0, 2.0]}})
    s = build_state(cfg)
    assert s.sector.tag == "S_minus_perm"
    np.testing.assert_array_equal(s.relabeled().q, [-1.0, 1.0])


def test_grid_spec():
    assert GridSpec(x_min=0.0, x_max=1.0, count=3).points().tolist() == [0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        GridSpec(x_min=1.0, x_max=1.0)


def test_integrator_config_bounds():
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=0.0)


def test_runtime_settings(monkeypatch):
    monkeypatch.setenv("PEAKON_WORKERS", "3")
    monkeypatch.setenv("PEAKON_LOG_LEVEL", "debug")
    settings = RuntimeSettings.from_env()
    assert settings.workers == 3
    assert settings.log_level == "DEBUG"

    monkeypatch.setenv("PEAKON_WORKERS", "many")
    with pytest.raises(ConfigError) as info:
        RuntimeSettings.from_env()
    assert info.value.field == "PEAKON_WORKERS"

    monkeypatch.delenv("PEAKON_WORKERS")
    assert RuntimeSettings.from_env().workers >= 1
