"""Run configuration: parsing, validation and problem construction.

A configuration is a JSON object; see the README for the schema.  All
coordinates (interface, source, grids) live in the frame where the upper
medium is isotropic.  With a non-identity upper medium the lower medium is
transformed by the upper transition matrix and point-source fields are scaled
by its determinant, so reported values are those of the physical problem.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import BoundaryCurve, curve_from_spec
from .media import (DerivedMedium, PermittivityTensor, derive_medium, material_matrix,
                    normalize_media)
from .rpml import VARIANTS, StretchProfile

DEFAULTS = {
    "k0": 2 * math.pi,
    "media": {"upper": [1.0, 0.0, 1.0], "lower": [4.0, 1.0, 9.0]},
    "incidence": {"type": "cylindrical", "source": [0.0, 0.1], "condition": "rc2"},
    "geometry": {"kind": "flat", "n_total": 1600},
    "layer": {"l1": 1.0, "d1": 1.0, "S": 2.0, "p": 6, "variant": "rpml2", "form": "full"},
    "output": {"dir": "out", "grid": {"spacing": 0.05, "height": 1.5, "depth": 1.5},
               "probes": 100, "seed": 0},
}

_TOP_KEYS = {"k0", "wavelength", "media", "incidence", "geometry", "layer", "output",
             "reference", "sweep", "greens", "compare", "name"}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _tensor(spec, name) -> PermittivityTensor:
    try:
        if isinstance(spec, dict):
            return PermittivityTensor(float(spec["e11"]), float(spec["e12"]),
                                      float(spec["e22"]), float(spec.get("e33", 1.0)))
        return PermittivityTensor.from_sequence(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"media.{name}: expected [e11, e12, e22(, e33)] or an object "
                          f"with e11/e12/e22/e33 ({exc})") from None


def _num(d, key, ctx, positive=False):
    try:
        v = float(d[key])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{ctx}.{key} must be a number") from None
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{ctx}.{key} must be {'positive' if positive else 'finite'}")
    return v


@dataclass
class RunConfig:
    """Validated run configuration.  ``raw`` keeps the merged JSON object."""

    raw: dict
    k0: float
    eps_plus: PermittivityTensor
    eps_minus: PermittivityTensor
    incidence: dict
    geometry: dict
    layer: dict
    output: dict
    medium: DerivedMedium = field(init=False)
    field_scale: float = field(init=False)
    t_plus: np.ndarray = field(init=False)

    def __post_init__(self):
        norm = normalize_media(material_matrix(self.eps_plus), material_matrix(self.eps_minus))
        self.medium = derive_medium(norm.m_minus)
        self.t_plus = norm.t_plus
        cyl = self.incidence["type"] == "cylindrical"
        self.field_scale = norm.source_scale if cyl else 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        raw = _merge(DEFAULTS, data)
        if "wavelength" in data:
            if "k0" in data:
                raise ConfigError("give either k0 or wavelength, not both")
            raw["k0"] = 2 * math.pi / _num(data, "wavelength", "config", positive=True)
            raw.pop("wavelength")
        k0 = _num(raw, "k0", "config", positive=True)
        media = raw["media"]
        eps_p = _tensor(media.get("upper"), "upper")
        eps_m = _tensor(media.get("lower"), "lower")

        inc = raw["incidence"]
        typ = inc.get("type")
        if typ == "cylindrical":
            src = inc.get("source")
            if not (isinstance(src, (list, tuple)) and len(src) == 2):
                raise ConfigError("incidence.source must be [x1, x2]")
            inc = {"type": typ, "source": [float(src[0]), float(src[1])],
                   "condition": inc.get("condition", "rc2")}
            if inc["condition"] not in ("rc1", "rc2"):
                raise ConfigError("incidence.condition must be 'rc1' or 'rc2'")
        elif typ == "plane":
            th = _num(inc, "theta", "incidence")
            if not 0 < th < math.pi:
                raise ConfigError("incidence.theta must lie in (0, pi)")
            inc = {"type": typ, "theta": th}
        else:
            raise ConfigError("incidence.type must be 'cylindrical' or 'plane'")
        raw["incidence"] = inc

        lay = raw["layer"]
        for key in ("l1", "d1"):
            _num(lay, key, "layer", positive=True)
        if _num(lay, "S", "layer") < 0:
            raise ConfigError("layer.S must be non-negative")
        if lay.get("variant", "rpml2") not in VARIANTS:
            raise ConfigError(f"layer.variant must be one of {list(VARIANTS)}")
        geo = raw["geometry"]
        if not isinstance(geo, dict) or "kind" not in geo:
            raise ConfigError("geometry.kind is required")
        out = raw["output"]
        cfg = cls(raw=raw, k0=k0, eps_plus=eps_p, eps_minus=eps_m, incidence=inc,
                  geometry=geo, layer=lay, output=out)
        # build once so geometry and layer errors surface before any computation
        cfg.curve()
        cfg.profile()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    # -- derived objects -----------------------------------------------------

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with layer (S, d1, l1, variant) or node-count overrides."""
        data = copy.deepcopy(self.raw)
        for k, v in kw.items():
            if k in ("S", "d1", "l1", "variant", "p", "form"):
                data["layer"][k] = v
            elif k == "n_total":
                data["geometry"] = _with_total(data["geometry"], int(v),
                                               len(self.curve().segments))
            else:
                raise ConfigError(f"unsupported override {k!r}")
        return RunConfig.from_dict(data)

    def curve(self) -> BoundaryCurve:
        spec = dict(self.geometry)
        spec["l1"] = float(self.layer["l1"])
        spec["d1"] = float(self.layer["d1"])
        return curve_from_spec(spec)

    def profile(self) -> StretchProfile:
        lay = self.layer
        return StretchProfile(float(lay["l1"]), float(lay["d1"]), float(lay["S"]),
                              int(lay.get("p", 6)), lay.get("form", "full"))

    @property
    def variant(self) -> str:
        return self.layer.get("variant", "rpml2")

    def problem_key(self) -> str:
        """Hash of what determines the exact solution (not the layer or mesh)."""
        geo = {k: v for k, v in self.geometry.items()
               if k not in ("n_total", "n_per_segment", "nodes", "p")}
        if geo.get("kind") == "segments":
            geo["segments"] = geo["segments"][1:-1]
        key = {"k0": self.k0, "upper": _tensor_list(self.eps_plus),
               "lower": _tensor_list(self.eps_minus), "incidence": self.incidence,
               "geometry": geo}
        text = json.dumps(key, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def metadata(self) -> dict:
        return {"config": self.raw, "problem_key": self.problem_key(),
                "upper_transition": self.t_plus.tolist(), "field_scale": self.field_scale,
                "lower_medium": {"m": self.medium.m.tolist(), "t": self.medium.t.tolist(),
                                 "alpha": self.medium.alpha, "sqrt_det": self.medium.sqrt_det}}


def _tensor_list(e: PermittivityTensor):
    return [e.e11, e.e12, e.e22, e.e33]


def _with_total(geo: dict, n_total: int, nseg: int) -> dict:
    geo = dict(geo)
    if geo["kind"] == "flat":
        geo["n_total"] = n_total
        return geo
    if n_total % nseg:
        raise ConfigError(f"N_tot={n_total} is not divisible by the {nseg} segments")
    if geo["kind"] == "segments":
        geo["nodes"] = [n_total // nseg] * nseg
    else:
        geo["n_per_segment"] = n_total // nseg
    return geo
