"""Run configuration: strict JSON schema, defaults, and object builders."""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema
import numpy as np

from .discretization import Grid, build_uniform_grid
from .errors import ConfigurationError
from .kernels import AlphaKernel, BetaKernel, GeneralKernel, LambdaAlphaKernel, peridynamic_alpha
from .peridyn import WEIGHTED_VOLUME_MODES, PeridynamicMaterial

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj({
    "seed": {"type": "integer", "minimum": 0},
    "grid": _obj({
        "dim": {"type": "integer", "enum": [1, 2, 3]},
        "bounds": {"type": "array", "minItems": 1, "maxItems": 3,
                   "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
        "spacing": _POS,
        "horizon": _POS,
        "padding": {"type": "number", "minimum": 0},
    }, required=("bounds", "spacing", "horizon")),
    "kernel": _obj({
        "family": {"enum": ["alpha", "beta", "general", "lambda_alpha"]},
        "form": {"enum": ["peridynamic", "random", "symmetric", "antisymmetric"]},
        "k": {"type": "integer", "enum": [1, 2, 3]},
        "parameters": _obj({
            "exponent": _NUM,
            "lambda_radius": _POS,
        }),
    }),
    "material": _obj({
        "bulk": _POS,
        "shear": _POS,
        "density": _POS,
        "r": {"type": "number", "minimum": 0, "exclusiveMaximum": 5},
        "delta": _POS,
        "weighted_volume": {"enum": list(WEIGHTED_VOLUME_MODES)},
        "heterogeneity": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    }),
    "verify": _obj({
        "suites": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "norm_trials": {"type": "integer", "minimum": 1},
    }),
    "compare": _obj({
        "forms": {"type": "array", "minItems": 1, "uniqueItems": True,
                  "items": {"enum": ["direct", "kernel", "gradient", "tensor"]}},
        "tolerance": _POS,
    }),
    "simulate": _obj({
        "dt": {"oneOf": [_POS, {"const": "auto"}]},
        "safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "steps": {"type": "integer", "minimum": 0},
        "stride": {"type": "integer", "minimum": 1},
        "initial": _obj({
            "type": {"enum": ["zero", "constant", "gaussian"]},
            "amplitude": _VEC3,
            "center": _VEC3,
            "width": _POS,
            "velocity": _VEC3,
        }),
        "constraints": {"type": "array", "items": _obj({
            "face": {"enum": ["x1-", "x1+", "x2-", "x2+", "x3-", "x3+"]},
            "layer": _POS,
            "amplitude": _VEC3,
            "frequency": {"type": "number", "minimum": 0},
        }, required=("face",))},
        "body_force": _VEC3,
    }),
    "output": _obj({
        "dir": {"type": "string"},
        "residuals": {"type": "string"},
        "blocks": {"type": "string"},
        "trajectory": {"type": "string"},
        "energy": {"type": "string"},
    }),
}, required=("grid",))

DEFAULTS = {
    "seed": 0,
    "grid": {"padding": 0.0},
    "kernel": {"family": "alpha", "form": "peridynamic", "k": 3, "parameters": {}},
    "material": {"bulk": 1.0, "shear": 0.5, "density": 1.0, "r": 2.0,
                 "weighted_volume": "discrete", "heterogeneity": 0.0},
    "verify": {"norm_trials": 20},
    "compare": {"forms": ["direct", "kernel", "gradient", "tensor"], "tolerance": 1e-10},
    "simulate": {"dt": "auto", "safety": 0.5, "steps": 1000, "stride": 10,
                 "initial": {"type": "zero", "amplitude": [0.0, 0.0, 0.0], "width": 0.15,
                             "velocity": [0.0, 0.0, 0.0]},
                 "constraints": [], "body_force": [0.0, 0.0, 0.0]},
    "output": {"dir": ".", "residuals": "residuals.csv", "blocks": "blocks.csv",
               "trajectory": "trajectory.csv", "energy": "energy.csv"},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(raw: dict) -> dict:
    """Validate against the schema and return a copy with defaults filled in."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from None
    cfg = _merge(DEFAULTS, raw)
    grid = cfg["grid"]
    grid.setdefault("dim", len(grid["bounds"]))
    if grid["dim"] != len(grid["bounds"]):
        raise ConfigurationError("config error at grid: dim does not match the number of bounds")
    return cfg


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from None
    return validate(raw)


def build_grid(cfg: dict) -> Grid:
    g = cfg["grid"]
    return build_uniform_grid(g["bounds"], g["spacing"], g["horizon"], g["padding"])


def build_kernel(cfg: dict, grid: Grid, seed: int):
    """Kernel described by the kernel section.

    ``alpha``/``beta`` with ``form = "symmetric"``/``"antisymmetric"`` build the
    deliberate parity violation used to exercise the admissibility check.
    """
    kc = cfg["kernel"]
    fam, form, k = kc["family"], kc["form"], kc["k"]
    params = kc["parameters"]
    rng = np.random.default_rng(seed)
    if fam == "general":
        if form not in ("random",):
            raise ConfigurationError("general kernels support form 'random' only")
        return GeneralKernel.random_divergence(grid, k, rng)
    if form == "peridynamic":
        if fam not in ("alpha", "lambda_alpha") or k != grid.dim:
            raise ConfigurationError("peridynamic form needs an alpha-type family with k equal to the grid dimension")
        r = params.get("exponent", 2.0)
        alpha = peridynamic_alpha(grid, lambda d: d ** -r)
    elif form == "random":
        alpha = (BetaKernel if fam == "beta" else AlphaKernel).random(grid, k, rng)
    elif form == "symmetric" and fam == "alpha":
        alpha = AlphaKernel(grid, BetaKernel.random(grid, k, rng).values)
    elif form == "antisymmetric" and fam == "beta":
        alpha = BetaKernel(grid, AlphaKernel.random(grid, k, rng).values)
    else:
        raise ConfigurationError(f"form {form!r} is not available for family {fam!r}")
    if fam == "lambda_alpha":
        radius = params.get("lambda_radius", grid.horizon)
        return LambdaAlphaKernel(LambdaAlphaKernel.gaussian_bump(grid, radius), alpha)
    return alpha


def build_material(cfg: dict, grid: Grid, seed: int) -> PeridynamicMaterial:
    """Material with optional seeded heterogeneity: each field times U[1 - h, 1 + h]."""
    if grid.dim != 3:
        raise ConfigurationError("peridynamics commands need a 3D grid")
    mc = cfg["material"]
    if mc.get("delta", grid.horizon) > grid.horizon * (1 + 1e-12):
        raise ConfigurationError("material delta exceeds the grid horizon; bonds beyond the horizon are not tracked")
    h = mc["heterogeneity"]
    rng = np.random.default_rng(seed)

    def field(value):
        return value * rng.uniform(1.0 - h, 1.0 + h, grid.n) if h > 0 else value

    return PeridynamicMaterial(grid, field(mc["bulk"]), field(mc["shear"]), field(mc["density"]),
                               exponent=mc["r"], radius=mc.get("delta"),
                               weighted_volume_mode=mc["weighted_volume"])
