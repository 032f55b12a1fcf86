import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union


def ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def normalize_path(path: Union[str, Path]) -> Path:
    return Path(path).expanduser().resolve()


def _atomic_replace(path: Path, data: Union[str, bytes], encoding: str) -> None:
    path = normalize_path(path)
    ensure_dir(path.parent)
    fd, tmp_name = tempfile.mkstemp(dir=str(path.parent))
    tmp_path = Path(tmp_name)
    try:
        if isinstance(data, bytes):
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
        else:
            with os.fdopen(fd, "w", encoding=encoding, newline="") as handle:
                handle.write(data)
        tmp_path.replace(path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink(missing_ok=True)


def atomic_write(path: Path, data: str, encoding: str = "utf-8") -> None:
    _atomic_replace(path, data, encoding)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    _atomic_replace(path, data, "utf-8")


def load_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def dump_json(data: Any, indent: int = 2) -> str:
    return json.dumps(data, indent=indent, ensure_ascii=True) + "\n"


def save_json(path: Path, data: Any, indent: int = 2) -> None:
    atomic_write(path, dump_json(data, indent=indent))
