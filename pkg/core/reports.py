import csv
import io
from dataclasses import dataclass, field, asdict
from typing import Any, Optional

from core.config import SCHEMA_VERSION
from core.fs import dump_json


@dataclass
class ReportItem:
    category: str
    severity: str
    message: str
    data: dict[str, Any] = field(default_factory=dict)


@dataclass
class Report:
    """Result of one command: diagnostics plus the JSON payload and CSV rows it emits."""

    tool_id: str
    title: str
    items: list[ReportItem] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    payload: dict[str, Any] = field(default_factory=dict)
    rows: list[dict[str, Any]] = field(default_factory=list)
    columns: Optional[list[str]] = None

    def add(self, item: ReportItem) -> None:
        self.items.append(item)

    @property
    def failed(self) -> bool:
        return any(item.severity == "error" for item in self.items)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "tool_id": self.tool_id,
        }
        data.update(self.payload)
        data["summary"] = self.summary
        data["items"] = [asdict(item) for item in self.items]
        return data

    def json_text(self) -> str:
        return dump_json(self.to_dict())

    def csv_text(self) -> str:
        buffer = io.StringIO()
        if not self.rows:
            return ""
        fieldnames = self.columns or list(self.rows[0].keys())
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({key: _csv_cell(row.get(key)) for key in fieldnames})
        return buffer.getvalue()

    def render(self, fmt: str) -> str:
        return self.csv_text() if fmt == "csv" else self.json_text()


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        # numpy floats subclass float but repr as np.float64(...)
        return repr(float(value))
    return value
