from typing import Optional


class TangentIqaError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(TangentIqaError, ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class SchemaValidationError(TangentIqaError, ValueError):
    pass


class ImageFormatError(TangentIqaError, ValueError):
    pass


class AspectError(TangentIqaError, ValueError):
    pass


class DimensionError(TangentIqaError, ValueError):
    pass


class GeometryError(TangentIqaError, ValueError):
    pass


class CapacityError(GeometryError):
    pass


class OutOfHemisphereError(GeometryError):
    pass


class ShapeError(TangentIqaError, ValueError):
    pass


class SupportError(TangentIqaError, ValueError):
    pass


class PairingError(TangentIqaError, ValueError):
    pass


class PluginError(TangentIqaError, RuntimeError):
    def __init__(self, name: str, message: str, stderr: str = "", timed_out: bool = False) -> None:
        super().__init__(f"plugin {name}: {message}")
        self.name = name
        self.stderr = stderr
        self.timed_out = timed_out


class AggregationError(TangentIqaError, ValueError):
    pass


class LayoutError(TangentIqaError, ValueError):
    pass


class MetricEvaluationError(TangentIqaError, RuntimeError):
    def __init__(self, metric: str, plane_index: Optional[int], cause: Exception) -> None:
        where = f" view {plane_index}" if plane_index is not None else ""
        super().__init__(f"{metric}{where}: {cause}")
        self.metric = metric
        self.plane_index = plane_index
        self.cause = cause


class DomainError(TangentIqaError, ValueError):
    pass


class IdentifiabilityError(TangentIqaError, ValueError):
    pass


class IncompleteDataError(TangentIqaError, ValueError):
    pass


class VoteFormatError(TangentIqaError, ValueError):
    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row
