import csv
import math
from pathlib import Path
from typing import Any, Optional

from core.errors import DomainError, IncompleteDataError
from core.reports import Report
from iqa.metrics import BUILTIN_NAMES, DESCRIPTORS, Polarity
from iqa.subjective import objective_preference, preference_agreement, read_votes, subjective_preference
from tools.base import BaseTool
from tools.utils import item_error, item_info

SCORE_TABLE_COLUMNS = ("scene", "method", "metric", "value")


class ScoreTable:
    """Long-format objective scores: one (scene, method, metric, value) per row."""

    def __init__(self) -> None:
        self.methods: list[str] = []
        self.metrics: list[str] = []
        self.cells: dict[str, dict[str, dict[str, float]]] = {}
        self.polarities: dict[str, Polarity] = {}

    def add(self, row: int, scene: str, method: str, metric: str, value: float, polarity: Optional[str]) -> None:
        if method not in self.methods:
            self.methods.append(method)
        if metric not in self.metrics:
            self.metrics.append(metric)
        per_scene = self.cells.setdefault(metric, {})
        cell = per_scene.setdefault(scene, {})
        if method in cell:
            raise DomainError(f"row {row}: duplicate score for {scene}/{method}/{metric}")
        cell[method] = value
        if polarity:
            parsed = Polarity.parse(polarity)
            if self.polarities.setdefault(metric, parsed) is not parsed:
                raise DomainError(f"row {row}: conflicting polarity for {metric}")

    def scenes(self) -> list[str]:
        ordered: list[str] = []
        for per_scene in self.cells.values():
            ordered.extend(scene for scene in per_scene if scene not in ordered)
        return ordered

    @classmethod
    def read(cls, path: Path) -> "ScoreTable":
        table = cls()
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            header = [name.strip() for name in reader.fieldnames or []]
            missing = [column for column in SCORE_TABLE_COLUMNS if column not in header]
            if missing:
                raise IncompleteDataError(f"row 1: missing columns: {', '.join(missing)}")
            reader.fieldnames = header
            for row_number, row in enumerate(reader, start=2):
                fields = {column: (row.get(column) or "").strip() for column in SCORE_TABLE_COLUMNS}
                empty = [column for column, value in fields.items() if not value]
                if empty:
                    raise IncompleteDataError(f"row {row_number}: empty {', '.join(empty)}")
                try:
                    value = float(fields["value"])
                except ValueError:
                    raise DomainError(f"row {row_number}: value is not a number: {fields['value']!r}") from None
                if not math.isfinite(value):
                    raise DomainError(f"row {row_number}: non-finite value {fields['value']!r}")
                table.add(
                    row_number,
                    fields["scene"],
                    fields["method"],
                    fields["metric"],
                    value,
                    (row.get("polarity") or "").strip() or None,
                )
        if not table.metrics:
            raise IncompleteDataError("score table has no rows")
        return table


class ComparePreferences(BaseTool):
    tool_id = "compare"
    title = "Objective Preference Comparison"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        scores_path = options.get("scores")
        if not scores_path:
            report.add(item_error("config", "a score table CSV is required"))
            return report
        table = ScoreTable.read(Path(scores_path))
        overrides = {name: Polarity.parse(text) for name, text in (options.get("polarity") or {}).items()}

        methods = table.methods
        scenes = table.scenes()
        metric_entries = []
        preferences: dict[str, dict[str, float]] = {}
        for metric in table.metrics:
            polarity = self._polarity(metric, table, overrides)
            row = objective_preference({scene: table.cells[metric].get(scene, {}) for scene in scenes}, polarity, methods)
            preferences[metric] = row
            metric_entries.append({"metric": metric, "polarity": polarity.value, "preferences": row})
            report.rows.append({"metric": metric, **row})

        payload: dict[str, Any] = {"methods": methods, "scenes": scenes, "metrics": metric_entries}
        columns = ["metric", *methods]

        votes_path = options.get("votes")
        if votes_path:
            records = read_votes(votes_path)
            subjective = subjective_preference(records, methods)
            report.rows.append({"metric": "subjective", **subjective})
            agreement = {}
            for metric, row in preferences.items():
                record = preference_agreement(row, subjective)
                agreement[metric] = record.to_dict()
                report.rows.append({"metric": f"agreement:{metric}", **record.to_dict()})
            payload["subjective"] = subjective
            payload["agreement"] = agreement
            columns += ["spearman", "top_match", "mean_abs_diff"]
            report.add(item_info("votes", f"Compared {len(preferences)} metrics against {len(records)} vote rows"))

        report.columns = columns
        report.payload = payload
        report.summary = {"methods": len(methods), "metrics": len(table.metrics)}
        return report

    def _polarity(self, metric: str, table: ScoreTable, overrides: dict[str, Polarity]) -> Polarity:
        if metric in overrides:
            return overrides[metric]
        if metric in table.polarities:
            return table.polarities[metric]
        if metric in BUILTIN_NAMES:
            return DESCRIPTORS[metric].polarity
        plugin = self.ctx.run.plugins.get(metric)
        if plugin is not None:
            return Polarity.parse(plugin.polarity)
        raise DomainError(f"No polarity known for metric {metric}; add a polarity column or --polarity {metric}=higher|lower")
