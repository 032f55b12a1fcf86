import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Optional

from core.config import Config

CONTEXT_PREFIX = "tiqa_"


class JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "name": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        for key, value in record.__dict__.items():
            if key.startswith(CONTEXT_PREFIX):
                payload[key] = value
        return json.dumps(payload, ensure_ascii=True, default=str)


class HumanFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        base = f"{record.levelname:<7} {record.name}: {record.getMessage()}"
        context = {
            key[len(CONTEXT_PREFIX):]: value
            for key, value in record.__dict__.items()
            if key.startswith(CONTEXT_PREFIX)
        }
        if context:
            base += " [" + " ".join(f"{k}={v}" for k, v in context.items()) + "]"
        if record.exc_info:
            base += f"\n{self.formatException(record.exc_info)}"
        return base


def setup_logging(cfg: Config, level: Optional[str] = None) -> None:
    cfg.logs_dir.mkdir(parents=True, exist_ok=True)
    json_path = cfg.logs_dir / "tiqa.jsonl"
    human_path = cfg.logs_dir / "tiqa.log"

    root = logging.getLogger()
    root.setLevel((level or cfg.log_level).upper())
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    json_handler = logging.FileHandler(json_path, encoding="utf-8")
    json_handler.setFormatter(JsonLineFormatter())

    human_handler = logging.FileHandler(human_path, encoding="utf-8")
    human_handler.setFormatter(HumanFormatter())

    # stdout carries command output (CSV/JSON), so console logs go to stderr
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(HumanFormatter())

    root.addHandler(json_handler)
    root.addHandler(human_handler)
    root.addHandler(stream_handler)


class _ContextAdapter(logging.LoggerAdapter):
    def process(self, msg: Any, kwargs: Any) -> tuple[Any, Any]:
        extra = dict(self.extra or {})
        extra.update(kwargs.get("extra") or {})
        kwargs["extra"] = extra
        return msg, kwargs


def get_logger(name: str, **context: Any) -> logging.LoggerAdapter:
    logger = logging.getLogger(name)
    extra = {f"{CONTEXT_PREFIX}{k}": v for k, v in context.items() if v is not None}
    return _ContextAdapter(logger, extra)
