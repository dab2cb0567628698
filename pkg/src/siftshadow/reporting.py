"""Canonical report serialization, schema validation, and report diffing.

JSON output is canonical: keys sorted, floats rendered with 17 significant
digits, no whitespace variation — reruns with the same config and seed are
byte-identical.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import jsonschema

from .errors import BadParameters, SchemaMismatch

REPORT_KINDS = (
    "sift",
    "shadow",
    "repellers",
    "abnormal",
    "expansion_fit",
    "kingman",
    "tgamma",
)

_schema_cache: dict = {}


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise BadParameters("canonical JSON forbids NaN/inf")
    return format(x, ".17g")


def canonical_dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed float formatting."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        items = []
        for k in sorted(obj):
            if not isinstance(k, str):
                raise BadParameters("canonical JSON needs string keys")
            items.append(f"{json.dumps(k)}:{canonical_dumps(obj[k])}")
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_dumps(v) for v in obj) + "]"
    # numpy scalars and similar
    if hasattr(obj, "item"):
        return canonical_dumps(obj.item())
    raise BadParameters(f"cannot serialize {type(obj).__name__} canonically")


def load_schema(kind: str) -> dict:
    if kind not in REPORT_KINDS:
        raise BadParameters(f"unknown report kind {kind!r}")
    if kind not in _schema_cache:
        text = resources.files("siftshadow.schemas").joinpath(f"{kind}.schema.json").read_text()
        _schema_cache[kind] = json.loads(text)
    return _schema_cache[kind]


def validate_report(payload: dict) -> str:
    kind = payload.get("kind")
    if kind not in REPORT_KINDS:
        raise SchemaMismatch(f"report kind {kind!r} not recognized")
    try:
        jsonschema.validate(payload, load_schema(kind))
    except jsonschema.ValidationError as e:
        raise SchemaMismatch(f"report fails its schema: {e.message}") from e
    return kind


def dump_report(payload: dict) -> str:
    """Validate then render canonically (with trailing newline)."""
    validate_report(payload)
    return canonical_dumps(payload) + "\n"


def load_report(path) -> dict:
    with open(path, "r") as fh:
        payload = json.load(fh)
    validate_report(payload)
    return payload


_CSV_COLUMNS = {
    "repellers": ("period", "point", "indicator", "shadow_distance", "hausdorff"),
    "sift": ("index",),
    "kingman": ("level", "horizon", "value"),
    "shadow": ("period", "point", "shadow_distance", "suffix_min_average"),
    "abnormal": ("period", "point", "mean", "min_suffix", "mean_below", "suffixes_above"),
    "expansion_fit": ("C", "lambda", "k_max", "diagnostic"),
}


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _format_float(v)
    return str(v)


def dump_csv(payload: dict) -> str:
    """Flat CSV rendering of a report (columns documented in the README)."""
    kind = payload.get("kind")
    if kind not in _CSV_COLUMNS:
        raise BadParameters(f"no CSV rendering for report kind {kind!r}")
    cols = _CSV_COLUMNS[kind]
    if kind == "repellers":
        rows = payload["repellers"]
    elif kind == "sift":
        rows = [{"index": i} for i in payload["indices"]]
    elif kind == "kingman":
        rows = [
            {"level": i, "horizon": e["horizon"], "value": e["value"]}
            for i, e in enumerate(payload["estimates"])
        ]
    else:
        rows = [payload]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_csv_cell(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def compare_reports(a: dict, b: dict, tolerances: dict | None = None, default_tol: float = 0.0):
    """Field-by-field diff with per-field numeric tolerances.

    Tolerance lookup uses the innermost key name; everything else must match
    exactly.  Returns a list of diff records (empty means within tolerance).
    """
    tolerances = tolerances or {}
    if a.get("kind") != b.get("kind"):
        raise SchemaMismatch(
            f"cannot compare reports of kind {a.get('kind')!r} and {b.get('kind')!r}"
        )
    validate_report(a)
    validate_report(b)
    diffs: list[dict] = []

    def tol_for(key: str) -> float:
        return tolerances.get(key, default_tol)

    def walk(x, y, path: str, key: str):
        if isinstance(x, dict) and isinstance(y, dict):
            for k in sorted(set(x) | set(y)):
                if k not in x or k not in y:
                    diffs.append({"path": f"{path}.{k}", "a": x.get(k), "b": y.get(k)})
                else:
                    walk(x[k], y[k], f"{path}.{k}", k)
        elif isinstance(x, list) and isinstance(y, list):
            if len(x) != len(y):
                diffs.append({"path": path, "a": f"len {len(x)}", "b": f"len {len(y)}"})
                return
            for i, (xi, yi) in enumerate(zip(x, y)):
                walk(xi, yi, f"{path}[{i}]", key)
        elif isinstance(x, bool) or isinstance(y, bool):
            if x != y:
                diffs.append({"path": path, "a": x, "b": y})
        elif isinstance(x, (int, float)) and isinstance(y, (int, float)):
            t = tol_for(key)
            if not (x == y or abs(x - y) <= t):
                diffs.append({"path": path, "a": x, "b": y, "tol": t})
        else:
            if x != y:
                diffs.append({"path": path, "a": x, "b": y})

    walk(a, b, "$", "")
    return diffs
