from collections import Counter
from typing import Any, Optional

from core.errors import IdentifiabilityError, IncompleteDataError
from core.reports import Report
from iqa.subjective import (
    VoteMatrix,
    VoteRecord,
    bradley_terry,
    pairwise_preferences,
    pooled_preferences,
    read_votes,
    records_by_scene,
    significance_thresholds,
)
from tools.base import BaseTool
from tools.utils import error_item, item_error

SUBJECTIVE_COLUMNS = ["scope", "kind", "method", "opponent", "pref_prob", "votes", "ties", "n", "verdict", "bt_strength"]


class SubjectiveStudy(BaseTool):
    tool_id = "subjective"
    title = "Pairwise Subjective Study Analysis"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        report.columns = SUBJECTIVE_COLUMNS
        votes_path = options.get("votes")
        if not votes_path:
            report.add(item_error("config", "a vote CSV is required"))
            return report
        alpha = self.ctx.run.alpha
        records = read_votes(votes_path)
        n = self._participants(records, options.get("n"))
        k_lo, k_hi = significance_thresholds(n, alpha)

        methods = VoteMatrix.from_records(records).methods
        payload: dict[str, Any] = {
            "thresholds": {"n": n, "alpha": alpha, "k_lo": k_lo, "k_hi": k_hi},
            "overall": self._analyse("all", records, methods, report),
        }
        grouped = records_by_scene(records)
        if len(grouped) > 1 or any(scene for scene in grouped):
            payload["scenes"] = {
                scene: self._analyse(scene, scene_records, methods, report)
                for scene, scene_records in grouped.items()
            }
        report.payload = payload
        report.summary = {"methods": len(methods), "scenes": len(grouped), "rows": len(records)}
        return report

    def _participants(self, records: list[VoteRecord], requested: Optional[int]) -> int:
        if requested is not None:
            for record in records:
                if abs(record.total - requested) > 1e-9:
                    raise IncompleteDataError(f"row {record.row}: {record.total:g} votes, expected n = {requested}")
            return int(requested)
        totals = Counter(int(round(record.total)) for record in records)
        return totals.most_common(1)[0][0]

    def _analyse(self, scope: str, records: list[VoteRecord], methods: tuple[str, ...], report: Report) -> dict[str, Any]:
        alpha = self.ctx.run.alpha
        # a scene only ranks the methods it compares
        present = {name for record in records for name in (record.method_a, record.method_b)}
        matrix = VoteMatrix.from_records(records, [name for name in methods if name in present])
        per_pair = pairwise_preferences(matrix, alpha)
        pooled = pooled_preferences(matrix, alpha)
        try:
            bt = bradley_terry(matrix)
        except IdentifiabilityError as exc:
            report.add(error_item(exc, scope=scope))
            bt = None

        for result in per_pair:
            report.rows.append({"scope": scope, "kind": "per_pair", **result.to_dict()})
        strengths = dict(zip(bt.methods, bt.strengths)) if bt is not None else {}
        for result in pooled:
            report.rows.append({
                "scope": scope,
                "kind": "mean_over_opponents",
                **result.to_dict(),
                "bt_strength": strengths.get(result.method),
            })
        return {
            "per_pair": [result.to_dict() for result in per_pair],
            "mean_over_opponents": [result.to_dict() for result in pooled],
            "bradley_terry": bt.to_dict() if bt is not None else None,
        }
