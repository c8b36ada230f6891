"""Scenario files: schema, defaults, object construction and the tolerance echo.

Scenarios are JSON documents validated against :data:`SCHEMA`.  Every default
a task consumes lives in :data:`TASK_DEFAULTS` or :func:`tolerances`, and the
resolved values are written back into each report so a run can be audited
without reading the code.
"""
import copy
import json
from importlib import resources

import jsonschema
import numpy as np

from . import geometry, microlocal, passivity, states

SCHEMA_VERSION = 1

TASKS = ("wf-scan", "acs-scan", "kms-check", "ground-check", "trace-check", "geodesic", "r-set",
         "wave-residual", "suppression-probe", "theorem51")
STATE_KINDS = ("FieldVacuum", "FieldKMS", "SingleModeGround", "SingleModeKMS", "MatrixTrace", "Mixture")
MODELS = ("Minkowski1p1", "CylinderRxS1", "Minkowski1p3")

# thresholds consumed by the task runners (module-level ones are collected in tolerances())
KILLING_TOL = 0.1
ANGLE_TOL_FACTOR = 2.0
MAX_WAVE_RESIDUAL = 1e-3
MIN_WAVE_ORDER = 1.8
DRIFT_TOL = 1e-9
SUPPRESSION_FACTOR = 0.5
RATIO_LOW = 1.5
RATIO_HIGH = 2.5

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {"type": "array", "items": _VEC, "minItems": 1}

_STATE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(STATE_KINDS)},
        "mass": _POS,
        "beta": _POS,
        "omega0": _POS,
        "occupation_scale": _POS,
        "hamiltonian": _MATRIX,
        "density": _MATRIX,
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "object", "required": ["weight", "state"],
                      "properties": {"weight": _NUM, "state": {"$ref": "#/$defs/state"}},
                      "additionalProperties": False},
        },
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["FieldVacuum", "FieldKMS"]}}},
         "then": {"required": ["mass"]}},
        {"if": {"properties": {"kind": {"enum": ["FieldKMS", "SingleModeKMS"]}}},
         "then": {"required": ["beta"]}},
        {"if": {"properties": {"kind": {"enum": ["SingleModeGround", "SingleModeKMS"]}}},
         "then": {"required": ["omega0"]}},
        {"if": {"properties": {"kind": {"const": "MatrixTrace"}}}, "then": {"required": ["hamiltonian"]}},
        {"if": {"properties": {"kind": {"const": "Mixture"}}}, "then": {"required": ["components"]}},
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "name", "task"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "expect": {"enum": ["PASS", "FAIL"]},
        "task": {"enum": list(TASKS)},
        "spacetime": {
            "type": "object",
            "required": ["model"],
            "properties": {"model": {"enum": list(MODELS)}, "circumference": _POS},
            "additionalProperties": False,
        },
        "state": {"$ref": "#/$defs/state"},
        "params": {"type": "object"},
        "scan": {
            "type": "object",
            "properties": {
                "lambdas": {"type": "array", "items": _POS, "minItems": 4},
                "window_sharpness": _POS, "window_halfwidth": _POS, "s_star": _NUM, "s_low": _NUM,
                "neighbourhood": {"type": "integer", "minimum": 0}, "noise_floor": _POS,
                "family_sigma": _NUM, "family_radius": _POS, "offsets": _VEC, "k_scale": _POS,
            },
            "additionalProperties": False,
        },
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
    "$defs": {"state": _STATE},
}

TASK_DEFAULTS = {
    "acs-scan": {"n_directions": 64, "center": [0.0, 0.0], "operators": None,
                 "expect_singular": [[-1.0, 1.0]], "check": "auto"},
    "wf-scan": {"pairs": [], "grid": {"n_angle": 16, "n_chi": 5}, "part": "full"},
    "theorem51": {"pairs": [], "grid": {"n_angle": 16, "n_chi": 5}, "inject": [],
                  "propagate": {"time_shifts": [1.0, 2.0]}},
    "kms-check": {"probes": None, "operators": None, "smearings": [{"center": [0.0, 0.0], "scale": 0.5}]},
    "ground-check": {"probes": None, "operators": None, "smearings": [{"center": [0.0, 0.0], "scale": 0.5}],
                     "n_pairs": 3},
    "trace-check": {"operators": None, "n_pairs": 3, "times": [0.0, 0.7, -2.3]},
    "geodesic": {"seed": {"q": [0.0, 0.0], "xi": [-1.0, 1.0]}, "affine_range": [0.0, 2.0],
                 "step": geometry.DEFAULT_STEP, "cauchy_times": []},
    "r-set": {"pairs": []},
    "wave-residual": {"eps": 1e-2, "h": [4e-3, 2e-3, 1e-3], "points": None, "operator_mass": None},
    "suppression-probe": {"omega0": 1.0, "betas": [0.5, 1.0, 2.0], "direction": [1.0, -1.0],
                          "include_ground": True, "inverse_lambdas": [4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
                          "halfwidth": 4.0, "sharpness": 4.0},
}


class ScenarioError(ValueError):
    """Scenario does not validate; ``pointer`` is the JSON pointer of the offending node."""

    def __init__(self, message, pointer="/"):
        super().__init__(message)
        self.pointer = pointer


def tolerances():
    """Every tolerance and threshold a run can consume, keyed by constant name."""
    return {
        "EPS_NULL": geometry.EPS_NULL,
        "XI_TOL": geometry.XI_TOL,
        "DEFAULT_STEP": geometry.DEFAULT_STEP,
        "TAIL_TOL": states.TAIL_TOL,
        "HERMITIAN_TOL": states.HERMITIAN_TOL,
        "STATIONARITY_TOL": states.STATIONARITY_TOL,
        "NOISE_FLOOR": microlocal.NOISE_FLOOR,
        "NEAR_FLOOR_FACTOR": microlocal.NEAR_FLOOR_FACTOR,
        "QUAD_RTOL": microlocal.QUAD_RTOL,
        "REG_EPS_RATIO": microlocal.REG_EPS_RATIO,
        "WINDOW_TAIL": microlocal.WINDOW_TAIL,
        "TOL_GROUND": passivity.TOL_GROUND,
        "TOL_KMS": passivity.TOL_KMS,
        "TOL_TRACE": passivity.TOL_TRACE,
        "KMS_FLOOR": passivity.KMS_FLOOR,
        "PROBE_GUARD": passivity.PROBE_GUARD,
        "BAND_CUT": passivity.BAND_CUT,
        "KILLING_TOL": KILLING_TOL,
        "ANGLE_TOL_FACTOR": ANGLE_TOL_FACTOR,
        "MAX_WAVE_RESIDUAL": MAX_WAVE_RESIDUAL,
        "MIN_WAVE_ORDER": MIN_WAVE_ORDER,
        "DRIFT_TOL": DRIFT_TOL,
        "SUPPRESSION_FACTOR": SUPPRESSION_FACTOR,
        "RATIO_LOW": RATIO_LOW,
        "RATIO_HIGH": RATIO_HIGH,
    }


def validate(doc):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ScenarioError(f"{err.message} (at {pointer})", pointer)


def resolve(doc):
    """Validated copy of ``doc`` with task defaults and scan defaults filled in."""
    validate(doc)
    doc = copy.deepcopy(doc)
    params = copy.deepcopy(TASK_DEFAULTS[doc["task"]])
    params.update(doc.get("params", {}))
    doc["params"] = params
    doc.setdefault("spacetime", {"model": "Minkowski1p1"})
    doc.setdefault("seed", 0)
    doc.setdefault("output", f"reports/{doc['name']}")
    base = microlocal.WFConfig() if doc["task"] in ("wf-scan", "theorem51") else microlocal.ScanConfig()
    scan = base.to_dict()
    scan.update(doc.get("scan", {}))
    doc["scan"] = {k: list(v) if isinstance(v, tuple) else v for k, v in scan.items()}
    return doc


def load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"not valid JSON: {exc}") from exc
    return resolve(doc)


# ------------------------------------------------------------ bundled

def bundled():
    """Names and documents of the scenarios shipped with the package, sorted by name."""
    root = resources.files("passivewf") / "scenarios"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = json.loads(entry.read_text(encoding="utf-8"))
    return out


# -------------------------------------------------------- construction

def build_model(spec):
    return geometry.model_from_name(spec["model"], spec.get("circumference"))


def build_state(spec, model=None):
    kind = spec["kind"]
    scale = spec.get("occupation_scale", 1.0)
    if kind in ("FieldVacuum", "FieldKMS"):
        if model is None:
            raise ScenarioError("field states need a spacetime", "/spacetime")
        beta = spec["beta"] if kind == "FieldKMS" else None
        return states.FieldState(model, spec["mass"], beta, scale)
    if kind in ("SingleModeGround", "SingleModeKMS"):
        beta = spec["beta"] if kind == "SingleModeKMS" else None
        return states.SingleModeState(spec["omega0"], beta, scale)
    if kind == "MatrixTrace":
        H = np.asarray(spec["hamiltonian"], dtype=float)
        rho = None if "density" not in spec else np.asarray(spec["density"], dtype=float)
        return states.MatrixTrace(H, rho)
    parts = tuple((float(c["weight"]), build_state(c["state"], model)) for c in spec["components"])
    try:
        return passivity.mix(parts)
    except (passivity.PassivityError, states.StateError) as exc:
        raise ScenarioError(str(exc), "/state/components") from exc


def build_scan_config(doc):
    cls = microlocal.WFConfig if doc["task"] in ("wf-scan", "theorem51") else microlocal.ScanConfig
    return cls(**doc["scan"])


def build_smearing(spec):
    return states.SmearingFunction(tuple(spec["center"]), scale=spec.get("scale", 0.5),
                                   radius=spec.get("radius", 1.0), sigma=spec.get("sigma", 0.0))


def random_operator(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
