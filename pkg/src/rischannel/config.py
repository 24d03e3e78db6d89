"""Experiment configuration: strict JSON parsing, schema validation and defaults.

Files use degrees for angles and dBi/dBm for gains and powers; conversion
to radians and linear units happens in :mod:`rischannel.experiments`.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import jsonschema

KINDS = ("pathloss", "sweep-ellipse", "phase-gain", "acf", "hardening", "estimate", "metrics")
FORMATS = ("csv", "json")
MODELS = ("FREE_SPACE", "TWO_RAY_RIS", "PO_FAR_FIELD", "TANG_GENERAL", "TANG_FAR_BF", "TANG_NEAR_BF",
          "TANG_NEAR_BC", "REFINED_FAR", "REFINED_NEAR", "SINGLE_ELEMENT", "ELLINGSON", "TILE_RCS")
# models that can run from scalar parameters alone
SCALAR_MODELS = ("FREE_SPACE", "TWO_RAY_RIS")
PROFILE_KINDS = ("UNIFORM", "FAR_FIELD_BEAM", "NEAR_FIELD_FOCUS", "RANDOM", "CUSTOM")
U64_MAX = 2 ** 64 - 1


class ConfigError(ValueError):
    """Invalid configuration; the message starts with a JSON path such as ``$.panel.m``."""


def _obj(props: dict, required=()) -> dict:
    out = {"type": "object", "additionalProperties": False, "properties": props}
    if required:
        out["required"] = list(required)
    return out


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_ANGLE = {"type": "number", "minimum": -360, "maximum": 360}
_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_SEED = {"type": "integer", "minimum": 0, "maximum": U64_MAX}
_BITS = {"oneOf": [{"type": "integer", "minimum": 1, "maximum": 16}, {"const": "continuous"}]}

_ANTENNA = _obj({"position_m": _VEC3, "gain_dbi": {"type": "number"}}, ["position_m"])

_PROFILE = _obj({
    "kind": {"enum": list(PROFILE_KINDS)},
    "label": {"type": "string"},
    "value_deg": _ANGLE,
    "theta_r_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 90},
    "phi_r_deg": _ANGLE,
    "target_m": _VEC3,
    "seed": _SEED,
    "values_deg": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    "quantization_bits": _BITS,
}, ["kind"])

_RAY = _obj({
    "power": _NONNEG,
    "aoa_deg": _ANGLE,
    "delay_s": _NONNEG,
    "ris": {"type": "boolean"},
    "los": {"type": "boolean"},
}, ["power", "aoa_deg"])

_FADING = _obj({
    "preset": {"enum": ["ris", "ring", "custom"]},
    "frequency_hz": _POS,
    "speed_mps": _NONNEG,
    "heading_deg": _ANGLE,
    "rays": {"type": "array", "items": _RAY, "minItems": 1},
    "n_rays": {"type": "integer", "minimum": 1},
    "k_factor": {"oneOf": [_NONNEG, {"type": "null"}]},
    "snapshots": {"type": "integer", "minimum": 2},
    "runs": {"type": "integer", "minimum": 1},
    "sample_interval_s": _POS,
    "max_lag": {"type": "integer", "minimum": 0},
    "baseline": {"enum": ["static", "absent"]},
})

SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "rischannel experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(KINDS)},
        "seed": _SEED,
        "scene": _obj({
            "frequency_hz": _POS,
            "tx": _ANTENNA,
            "rx": _ANTENNA,
            "ris": _obj({"center_m": _VEC3, "normal": _VEC3, "x_axis": _VEC3}, ["center_m", "normal"]),
            "d1_m": _POS,
            "d2_m": _POS,
            "incidence_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 90},
            "reflect_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 90},
            "gt_dbi": {"type": "number"},
            "gr_dbi": {"type": "number"},
            "d_tr_m": _POS,
        }, ["frequency_hz"]),
        "panel": _obj({
            "m": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 1},
            "dx_m": _POS,
            "dy_m": _POS,
            "pitch_wavelengths": _POS,
            "q": _NONNEG,
            "element_gain": _POS,
            "amplitude": {"type": "number", "minimum": 0, "maximum": 1},
            "efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "quantization_bits": _BITS,
            "phase_profile": _PROFILE,
        }, ["m", "n"]),
        "model": _obj({
            # pathloss / sweep-ellipse / phase-gain
            "models": {"type": "array", "items": {"enum": list(MODELS)}, "minItems": 1},
            "tx_power_dbm": {"type": "number"},
            "d_m": _POS,
            "frequency_hz": _POS,
            "gt_dbi": {"type": "number"},
            "gr_dbi": {"type": "number"},
            "q_elements": {"type": "integer", "minimum": 0},
            "plate_m": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
            "tile_g": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "element": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
            "profiles": {"type": "array", "items": _PROFILE, "minItems": 1},
            # acf / metrics
            "fading": _FADING,
            "taps": _obj({"delays_s": {"type": "array", "items": _NONNEG, "minItems": 1},
                          "powers": {"type": "array", "items": _NONNEG, "minItems": 1}},
                         ["delays_s", "powers"]),
            "matrix": _obj({"re": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                            "im": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
                           ["re"]),
            # hardening
            "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "runs": {"type": "integer", "minimum": 100},
            "links": {"enum": ["rayleigh", "unit"]},
            "phases": {"enum": ["optimal", "random"]},
            # estimate
            "k_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "snr_db": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "trials": {"type": "integer", "minimum": 1},
            "n_paths": {"type": "integer", "minimum": 1},
            "n_ris": {"type": "integer", "minimum": 0},
            "layout": {"enum": ["nested", "uniform"]},
            "max_iterations": {"type": "integer", "minimum": 1},
            "tolerance": _POS,
            "threshold": _POS,
        }),
        "sweep": _obj({
            "variable": {"const": "d1"},
            "start": _POS,
            "stop": _POS,
            "steps": {"type": "integer", "minimum": 2},
            "semi_major_m": _POS,
        }),
        "output": _obj({"path": {"type": "string", "minLength": 1}, "format": {"enum": list(FORMATS)}}),
    },
}

# defaults filled after validation, per block and per experiment kind
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "panel": {"q": 3.0, "amplitude": 1.0, "efficiency": 1.0, "quantization_bits": "continuous"},
    "output": {"format": "csv"},
}
KIND_DEFAULTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "pathloss": {"model": {"tx_power_dbm": 0.0}},
    "sweep-ellipse": {
        "model": {"models": ["TANG_NEAR_BF"], "tx_power_dbm": 0.0},
        "sweep": {"variable": "d1", "start": 140.0, "stop": 200.0, "steps": 61, "semi_major_m": 200.0},
    },
    "phase-gain": {"model": {"models": ["TANG_GENERAL"], "tx_power_dbm": 0.0,
                             "profiles": [{"kind": "UNIFORM"}, {"kind": "NEAR_FIELD_FOCUS"}]}},
    "acf": {"model": {"fading": {}}},
    "hardening": {"model": {"n_values": [256, 1024, 4096], "runs": 1000, "links": "rayleigh",
                            "phases": "optimal"}},
    "estimate": {"model": {"k_values": [4, 5, 6], "snr_db": [0.0, 10.0, 20.0], "trials": 100, "n_paths": 3,
                           "n_ris": 1, "layout": "nested", "max_iterations": 20, "tolerance": 1e-4,
                           "threshold": 0.05}},
    "metrics": {"model": {}},
}
FADING_DEFAULTS = {"preset": "ris", "speed_mps": 30.0, "heading_deg": 0.0, "snapshots": 400, "runs": 200,
                   "max_lag": 200, "baseline": "static"}
FADING_FREQ = {"ris": 5.9e9, "ring": 2.4e9, "custom": 5.9e9}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    scene: Optional[dict] = None
    panel: Optional[dict] = None
    model: dict = field(default_factory=dict)
    sweep: Optional[dict] = None
    output: dict = field(default_factory=lambda: {"format": "csv"})

    def to_dict(self) -> dict:
        out = {"experiment": self.kind, "seed": self.seed}
        for key in ("scene", "panel", "model", "sweep", "output"):
            val = getattr(self, key)
            if val is not None:
                out[key] = copy.deepcopy(val)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """Content hash of everything that affects the numbers (the output block is excluded)."""
        doc = self.to_dict()
        doc.pop("output", None)
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"$: duplicate key {key!r}")
        out[key] = value
    return out


def _reject_constant(name):
    raise ConfigError(f"$: non-standard JSON constant {name}")


def _json_path(err: jsonschema.ValidationError) -> str:
    path = "$"
    for part in err.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _require(doc: dict, block: str, why: str):
    if block not in doc:
        raise ConfigError(f"$.{block}: required block {block!r} missing ({why})")


def _check_kind(doc: dict):
    kind = doc["experiment"]
    model = doc.get("model", {})
    if kind == "pathloss":
        models = model.get("models")
        if not models:
            raise ConfigError("$.model.models: required for experiment 'pathloss'")
        for name in models:
            if name in SCALAR_MODELS and "scene" not in doc:
                if "d_m" not in model and name == "FREE_SPACE":
                    raise ConfigError("$.model.d_m: FREE_SPACE without a scene needs d_m")
                if "frequency_hz" not in model:
                    raise ConfigError(f"$.model.frequency_hz: {name} without a scene needs frequency_hz")
            if name not in SCALAR_MODELS:
                _require(doc, "scene", f"model {name}")
                _require(doc, "panel", f"model {name}")
    elif kind in ("sweep-ellipse", "phase-gain"):
        _require(doc, "scene", f"experiment {kind!r}")
        _require(doc, "panel", f"experiment {kind!r}")
    if "scene" in doc and kind in ("pathloss", "phase-gain"):
        sc = doc["scene"]
        has_pos = all(k in sc for k in ("tx", "rx", "ris"))
        has_ang = all(k in sc for k in ("d1_m", "d2_m", "incidence_deg", "reflect_deg"))
        if not (has_pos or has_ang):
            raise ConfigError("$.scene: give either tx/rx/ris positions or d1_m/d2_m/incidence_deg/reflect_deg")
    if "panel" in doc:
        p = doc["panel"]
        if not ("pitch_wavelengths" in p or ("dx_m" in p and "dy_m" in p)):
            raise ConfigError("$.panel: needs dx_m and dy_m, or pitch_wavelengths")
    if kind == "metrics" and not any(k in model for k in ("fading", "taps", "matrix")):
        raise ConfigError("$.model: metrics needs at least one of fading, taps, matrix")
    if kind == "metrics" and "taps" in model and len(model["taps"]["delays_s"]) != len(model["taps"]["powers"]):
        raise ConfigError("$.model.taps.powers: length must match delays_s")


def validate(doc: Any) -> ExperimentConfig:
    """Validate a decoded document and fill defaults."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_json_path(err)}: {err.message}")
    _check_kind(doc)
    kind = doc["experiment"]
    filled = _merge(KIND_DEFAULTS.get(kind, {}), {k: v for k, v in doc.items() if k != "experiment"})
    for block, defaults in DEFAULTS.items():
        if block in filled or block == "output":
            filled[block] = _merge(defaults, filled.get(block, {}))
    fading = filled.get("model", {}).get("fading")
    if fading is not None:
        fading = _merge(FADING_DEFAULTS, fading)
        fading.setdefault("frequency_hz", FADING_FREQ[fading["preset"]])
        if fading["preset"] == "custom" and "rays" not in fading:
            raise ConfigError("$.model.fading.rays: required for preset 'custom'")
        filled["model"]["fading"] = fading
    return ExperimentConfig(kind=kind, seed=int(filled.get("seed", 0)), scene=filled.get("scene"),
                            panel=filled.get("panel"), model=filled.get("model", {}),
                            sweep=filled.get("sweep"), output=filled["output"])


def parse_config(text) -> ExperimentConfig:
    """Parse a UTF-8 JSON document into a validated :class:`ExperimentConfig`."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"$: not valid UTF-8 ({exc})") from None
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return validate(doc)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"$: cannot read config {path}: {exc.strerror}") from None
    return parse_config(data)


def schema_json() -> str:
    return json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n"
