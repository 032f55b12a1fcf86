import re
from typing import Any

from core.errors import MetricEvaluationError, PluginError, TangentIqaError, VoteFormatError
from core.reports import ReportItem

_CAMEL_RE = re.compile(r"(?<!^)(?=[A-Z])")


def view_filename(plane_index: int) -> str:
    return f"view_{plane_index:04d}.png"


def error_category(exc: Exception) -> str:
    """AspectError -> "aspect", ConfigError -> "config"."""
    name = type(exc).__name__
    if name.endswith("Error"):
        name = name[: -len("Error")]
    return _CAMEL_RE.sub("_", name).lower() or "error"


def error_item(exc: TangentIqaError, **data: Any) -> ReportItem:
    details = dict(data)
    if isinstance(exc, MetricEvaluationError):
        details.update(metric=exc.metric, plane_index=exc.plane_index)
        if isinstance(exc.cause, PluginError):
            details.update(stderr=exc.cause.stderr, timed_out=exc.cause.timed_out)
    elif isinstance(exc, PluginError):
        details.update(stderr=exc.stderr, timed_out=exc.timed_out)
    elif isinstance(exc, VoteFormatError):
        details.update(row=exc.row)
    key = getattr(exc, "key", None)
    if key:
        details.update(key=key)
    return item_error(error_category(exc), str(exc), data=details)


def item_error(category: str, message: str, **kwargs: Any) -> ReportItem:
    return ReportItem(category=category, severity="error", message=message, **kwargs)


def item_info(category: str, message: str, **kwargs: Any) -> ReportItem:
    return ReportItem(category=category, severity="info", message=message, **kwargs)
