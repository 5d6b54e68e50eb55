import json
import math

import numpy as np
import pytest

from rpmlbie.config import RunConfig
from rpmlbie.errors import ConfigError
from rpmlbie.io import read_csv, write_csv


def test_defaults():
    cfg = RunConfig.from_dict({})
    assert cfg.k0 == pytest.approx(2 * math.pi)
    assert cfg.variant == "rpml2" and cfg.field_scale == 1.0
    assert cfg.curve().n_total == 1600


def test_wavelength_and_overrides():
    cfg = RunConfig.from_dict({"wavelength": 0.5, "geometry": {"kind": "bump_dip",
                                                                "n_per_segment": 10},
                               "layer": {"l1": 2.0, "d1": 1.5}})
    assert cfg.k0 == pytest.approx(4 * math.pi)
    c2 = cfg.with_overrides(S=3.0, n_total=80)
    assert c2.layer["S"] == 3.0 and c2.curve().nodes == [20] * 4
    # the problem key ignores layer and mesh
    assert c2.problem_key() == cfg.problem_key()
    assert cfg.with_overrides(d1=1.0).problem_key() == cfg.problem_key()
    with pytest.raises(ConfigError):
        cfg.with_overrides(n_total=81)


@pytest.mark.parametrize("bad", [
    {"k0": -1},
    {"k0": 1, "wavelength": 1},
    {"media": {"lower": [1, 2, 1]}},
    {"incidence": {"type": "plane", "theta": 4.0}},
    {"incidence": {"type": "cylindrical", "source": [0.0]}},
    {"incidence": {"type": "spherical"}},
    {"layer": {"variant": "cpml"}},
    {"layer": {"S": -1}},
    {"geometry": {"kind": "zigzag"}},
    {"colour": "blue"},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_anisotropic_upper_medium_is_normalized():
    cfg = RunConfig.from_dict({"media": {"upper": [2, 0.5, 3], "lower": [4, 1, 9]}})
    tp = cfg.t_plus
    assert cfg.field_scale == pytest.approx(abs(np.linalg.det(tp)))
    assert not np.allclose(tp, np.eye(2))


def test_load_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(p)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")


def test_csv_round_trip(tmp_path):
    x = np.array([0.1, 1 / 3, -2e-17])
    digest = write_csv(tmp_path / "a.csv", {"k": 1}, {"x": x, "tag": ["a", "b", "c"]})
    meta, cols = read_csv(tmp_path / "a.csv")
    assert meta["k"] == 1 and meta["data_sha256"] == digest
    assert np.array_equal(cols["x"], x)
    assert list(cols["tag"]) == ["a", "b", "c"]
