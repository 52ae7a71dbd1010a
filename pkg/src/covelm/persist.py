"""Textual, bit-exact persistence for trained models and JSON reports.

Model files are JSON documents. Every float is written with 17 significant
digits, which round-trips IEEE-754 doubles exactly, and array rows are laid
out one per line so the files diff cleanly.
"""
import json
from pathlib import Path

import jsonschema
import numpy as np

from .elm import ElmModel, Standardizer
from .errors import IoError, LayoutMismatch, ParseError, VersionError
from .features import LAYOUT_DIGEST

FORMAT_NAME = "covelm-model"
FORMAT_VERSION = 1

_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
MODEL_SCHEMA = {
    "type": "object",
    "required": [
        "format", "format_version", "activation", "n_features", "n_hidden", "n_classes",
        "class_order", "seed", "layout_digest", "feature_subset", "standardizer", "A", "b", "beta",
    ],
    "properties": {
        "format": {"const": FORMAT_NAME},
        "format_version": {"type": "integer"},
        "activation": {"enum": ["rbf_l2", "sigmoid"]},
        "n_features": {"type": "integer", "minimum": 1},
        "n_hidden": {"type": "integer", "minimum": 1},
        "n_classes": {"type": "integer", "minimum": 1},
        "class_order": {"type": "array", "items": {"type": ["string", "integer"]}, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "layout_digest": {"type": "string"},
        "feature_subset": {"enum": ["texture", "frequency", "combined", "custom"]},
        "standardizer": {
            "type": "object",
            "required": ["mean", "scale"],
            "properties": {"mean": _NUM_ARRAY, "scale": _NUM_ARRAY},
        },
        "A": {"type": "array", "items": _NUM_ARRAY},
        "b": _NUM_ARRAY,
        "beta": {"type": "array", "items": _NUM_ARRAY},
    },
    "additionalProperties": False,
}


def _num(x) -> str:
    v = float(x)
    if not np.isfinite(v):
        raise ValueError("model parameters must be finite")
    return format(v, ".17g")


def _vector(v) -> str:
    return "[" + ", ".join(_num(x) for x in np.ravel(v)) + "]"


def _matrix(m, indent="    ") -> str:
    rows = [indent + _vector(r) for r in np.asarray(m)]
    return "[\n" + ",\n".join(rows) + "\n  ]"


def dumps_model(model: ElmModel) -> str:
    subset = model.meta.get("feature_subset", "combined")
    head = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "activation": model.activation,
        "n_features": model.n_features,
        "n_hidden": model.n_hidden,
        "n_classes": model.n_classes,
        "class_order": list(model.class_order),
        "seed": int(model.seed),
        "layout_digest": model.meta.get("layout_digest", LAYOUT_DIGEST),
        "feature_subset": subset,
    }
    lines = ["{"]
    for key, val in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(val)},")
    lines.append('  "standardizer": {')
    lines.append(f'    "mean": {_vector(model.standardizer.mean)},')
    lines.append(f'    "scale": {_vector(model.standardizer.scale)}')
    lines.append("  },")
    lines.append(f'  "A": {_matrix(model.A)},')
    lines.append(f'  "b": {_vector(model.b)},')
    lines.append(f'  "beta": {_matrix(model.beta)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_model(model: ElmModel, path) -> None:
    text = dumps_model(model)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write model file {path}: {exc}") from exc


def loads_model(text: str, check_layout: bool = True) -> ElmModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc.msg}", line=exc.lineno) from None
    if isinstance(doc, dict) and isinstance(doc.get("format_version"), int):
        if doc["format_version"] != FORMAT_VERSION:
            raise VersionError(
                f"model format version {doc['format_version']} is not supported (expected {FORMAT_VERSION})"
            )
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"model file violates schema at {where}: {exc.message}") from None

    L, n, m = doc["n_hidden"], doc["n_features"], doc["n_classes"]
    A = np.array(doc["A"], dtype=np.float64)
    b = np.array(doc["b"], dtype=np.float64)
    beta = np.array(doc["beta"], dtype=np.float64)
    mean = np.array(doc["standardizer"]["mean"], dtype=np.float64)
    scale = np.array(doc["standardizer"]["scale"], dtype=np.float64)
    if (A.shape != (L, n) or b.shape != (L,) or beta.shape != (L, m)
            or mean.shape != (n,) or scale.shape != (n,) or len(doc["class_order"]) != m):
        raise ParseError("array shapes disagree with n_hidden/n_features/n_classes")
    if check_layout and doc["layout_digest"] != LAYOUT_DIGEST:
        raise LayoutMismatch(
            f"model expects feature layout {doc['layout_digest']}, this build produces {LAYOUT_DIGEST}"
        )
    meta = {"layout_digest": doc["layout_digest"], "feature_subset": doc["feature_subset"]}
    return ElmModel(A=A, b=b, beta=beta, activation=doc["activation"],
                    class_order=tuple(doc["class_order"]), standardizer=Standardizer(mean, scale),
                    seed=doc["seed"], meta=meta)


def load_model(path, check_layout: bool = True) -> ElmModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text, check_layout=check_layout)


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def save_report(report: dict, path) -> None:
    try:
        Path(path).write_text(dumps_report(report), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from exc
