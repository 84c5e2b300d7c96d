import pytest

from phaseplane.config import ExperimentConfig
from phaseplane.paths import get_path, set_path
from phaseplane.utils import ConfigError


def test_get_path_examples():
    # Dicts and the frozen config dataclasses work interchangeably
    raw = {"grid": {"r": 2.0}, "config": ExperimentConfig()}
    assert get_path(raw, "grid.r") == 2.0
    assert get_path(raw, "config.universe.k_max") == 2
    assert get_path(raw, "config.values.kind") == "hilbert"

    # Default when not found
    assert get_path(raw, "grid.t", default=0.0) == 0.0
    assert get_path(raw, "grid.t.u") is None
    assert get_path(None, "grid.r", default="none") == "none"

    # Raise instead
    with pytest.raises(ConfigError) as e:
        get_path(raw, "grid.t", default="raise")
    assert e.value.field == "grid.t"


def test_set_path_examples():
    raw = {}
    set_path(raw, "ensemble.seed", 7)
    assert raw == {"ensemble": {"seed": 7}}

    # Overwrites and adds
    set_path(raw, "ensemble.seed", 8)
    set_path(raw, "ensemble.threads", 2)
    set_path(raw, "alpha", 0.5)
    assert raw == {"ensemble": {"seed": 8, "threads": 2}, "alpha": 0.5}

    # Missing intermediate sections
    with pytest.raises(ConfigError) as e:
        set_path(raw, "grid.r", 2.0, make_missing=False)
    assert e.value.field == "grid.r"

    # Cannot descend into a value
    with pytest.raises(ConfigError):
        set_path(raw, "alpha.beta", 1)
