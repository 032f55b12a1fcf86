import re
from pathlib import Path
from typing import Any

from core.errors import SchemaValidationError
from core.fs import load_json

try:
    import jsonschema as _jsonschema
except Exception:  # pragma: no cover - optional dependency
    _jsonschema = None


def load_schema(schema_path: Path) -> dict[str, Any]:
    return load_json(schema_path)


def _require_jsonschema() -> Any:
    if _jsonschema is None:
        raise SchemaValidationError(
            "jsonschema library not installed. Install with: pip install jsonschema"
        )
    return _jsonschema


def _dotted_key(error: Any) -> str:
    path = [str(part) for part in error.absolute_path]
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        known = set(error.schema.get("properties", {}))
        patterns = list(error.schema.get("patternProperties", {}))
        extras = sorted(
            key for key in error.instance
            if key not in known and not any(re.search(p, key) for p in patterns)
        )
        if extras:
            path.append(extras[0])
    return ".".join(path) or "<root>"


def schema_errors(data: Any, schema_path: Path) -> list[tuple[str, str]]:
    """Return (dotted key, message) pairs for every violation, shallowest first."""
    lib = _require_jsonschema()
    schema = load_schema(schema_path)
    validator = lib.validators.validator_for(schema)(schema)
    errors = sorted(
        validator.iter_errors(data),
        key=lambda e: (len(e.absolute_path), [str(p) for p in e.absolute_path]),
    )
    return [(_dotted_key(err), err.message) for err in errors]


def validate_json(data: Any, schema_path: Path) -> None:
    problems = schema_errors(data, schema_path)
    if problems:
        key, message = problems[0]
        raise SchemaValidationError(f"{key}: {message}")
