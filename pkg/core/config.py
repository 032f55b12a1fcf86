import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from core.errors import ConfigError
from core.jsonschema import schema_errors

APP_NAME = "tangent_iqa"
ENV_PREFIX = "TANGENT_IQA"
CONFIG_ENV = f"{ENV_PREFIX}_CONFIG"

BUILTIN_METRICS = ("ssim", "msssim", "gmsd", "vifs", "nlpd")
SCHEMA_VERSION = 1


def _xdg_path(env_var: str, default: str) -> Path:
    value = os.environ.get(env_var)
    if value:
        return Path(value).expanduser()
    return Path(default).expanduser()


def _default_home() -> Path:
    return _xdg_path(f"{ENV_PREFIX}_HOME", "~/.tangent_iqa")


@dataclass
class Config:
    app_name: str = APP_NAME
    home_dir: Path = field(default_factory=_default_home)
    logs_dir: Path = field(default_factory=lambda: _xdg_path(f"{ENV_PREFIX}_LOGS", str(_default_home() / "logs")))
    cache_dir: Path = field(
        default_factory=lambda: _xdg_path(f"{ENV_PREFIX}_CACHE", str(_xdg_path("XDG_CACHE_HOME", "~/.cache") / APP_NAME))
    )
    schema_dir: Path = Path(__file__).resolve().parent.parent / "schemas"
    log_level: str = field(default_factory=lambda: os.environ.get(f"{ENV_PREFIX}_LOG_LEVEL", "INFO"))
    config_path: Optional[Path] = None

    def __post_init__(self) -> None:
        env_config = os.environ.get(CONFIG_ENV)
        if self.config_path is None and env_config:
            self.config_path = Path(env_config).expanduser()


_default_config: Optional[Config] = None


def get_config(refresh: bool = False) -> Config:
    global _default_config
    if _default_config is None or refresh:
        _default_config = Config()
    return _default_config


def ensure_dirs(cfg: Config) -> None:
    for path in [cfg.home_dir, cfg.logs_dir, cfg.cache_dir]:
        path.mkdir(parents=True, exist_ok=True)


@dataclass(frozen=True)
class PluginSpec:
    name: str
    cmd: str
    polarity: str = "higher"
    timeout: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    level: int = 1
    padding: float = 1.3
    interp: str = "bicubic"
    metrics: tuple[str, ...] = BUILTIN_METRICS
    alpha: float = 0.06
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    format: str = "json"
    seed: int = 0
    keep_temp: bool = False
    allow_any_aspect: bool = False
    weighted_mean: bool = False
    plugin_timeout: float = 120.0
    plugins: dict[str, PluginSpec] = field(default_factory=dict)
    constants: dict[str, dict[str, Any]] = field(default_factory=dict)


_SCALAR_KEYS = {f.name for f in fields(RunConfig)} - {"plugins", "constants"}
_CONSTANT_SECTIONS = ("ssim", "msssim", "gmsd", "vifs", "nlpd")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


def _coerce_scalar(raw: str) -> Any:
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text):
        return float(text)
    return text


_LIST_KEYS = frozenset({"metrics", "msssim.weights"})


def _coerce(key: str, raw: str) -> Any:
    if key.startswith("metric.") and key.endswith(".cmd"):
        # plugin command lines are shell text; commas belong to the tool
        return raw.strip()
    if key in _LIST_KEYS and "," in raw:
        return [_coerce_scalar(part) for part in raw.split(",") if part.strip()]
    return _coerce_scalar(raw)


def _assign(tree: dict[str, Any], dotted: str, value: Any) -> None:
    parts = [p.strip() for p in dotted.split(".")]
    if any(not p for p in parts):
        raise ConfigError(dotted, "empty key segment")
    node = tree
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(dotted, f"'{part}' is a value, not a section")
        node = child
    if isinstance(node.get(parts[-1]), dict):
        raise ConfigError(dotted, "is a section, not a value")
    node[parts[-1]] = value


def parse_config_text(text: str) -> dict[str, Any]:
    tree: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        _assign(tree, key, _coerce(key, raw))
    return tree


def _normalize(tree: dict[str, Any]) -> dict[str, Any]:
    metrics = tree.get("metrics")
    if isinstance(metrics, str):
        tree["metrics"] = [metrics]
    for section in ("msssim",):
        weights = tree.get(section, {}).get("weights") if isinstance(tree.get(section), dict) else None
        if isinstance(weights, (int, float)) and not isinstance(weights, bool):
            tree[section]["weights"] = [weights]
    return tree


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    schema_dir: Optional[Path] = None,
) -> RunConfig:
    """Load a key = value run config, apply dotted-key overrides and validate."""
    tree: dict[str, Any] = {}
    if path is not None:
        config_file = Path(path).expanduser()
        if not config_file.exists():
            raise ConfigError("config", f"file not found: {config_file}")
        tree = parse_config_text(config_file.read_text(encoding="utf-8"))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, str) and key == "metrics":
            value = [part.strip() for part in value.split(",") if part.strip()]
        _assign(tree, key, value)
    tree = _normalize(tree)

    schema_path = (schema_dir or get_config().schema_dir) / "run_config.schema.json"
    problems = schema_errors(tree, schema_path)
    if problems:
        key, message = problems[0]
        raise ConfigError(key, message)
    return _build(tree)


def _build(tree: dict[str, Any]) -> RunConfig:
    kwargs: dict[str, Any] = {key: tree[key] for key in _SCALAR_KEYS if key in tree}
    if "metrics" in kwargs:
        kwargs["metrics"] = tuple(kwargs["metrics"])
    plugins: dict[str, PluginSpec] = {}
    for name, entry in tree.get("metric", {}).items():
        if name in BUILTIN_METRICS:
            raise ConfigError(f"metric.{name}", "name collides with a built-in metric")
        plugins[name] = PluginSpec(
            name=name,
            cmd=str(entry["cmd"]),
            polarity=entry.get("polarity", "higher"),
            timeout=entry.get("timeout"),
        )
    kwargs["plugins"] = plugins
    kwargs["constants"] = {section: dict(tree[section]) for section in _CONSTANT_SECTIONS if section in tree}

    run = RunConfig(**kwargs)
    for name in run.metrics:
        if name not in BUILTIN_METRICS and name not in plugins:
            raise ConfigError("metrics", f"unknown metric '{name}' (no built-in and no metric.{name}.cmd)")
    return run
