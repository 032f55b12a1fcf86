from contextlib import nullcontext
from typing import Any

from core.errors import TangentIqaError
from core.jsonschema import validate_json
from core.reports import Report
from iqa.aggregate import TMetricReport, evaluate_outcomes, score_document, score_rows
from iqa.resample import Interp, render_all_views
from tools.base import BaseTool
from tools.utils import error_item, item_error

SCORE_COLUMNS = ["dist", "metric", "polarity", "t_value", "min", "max", "stddev", "status"]


class ScoreOdis(BaseTool):
    tool_id = "score"
    title = "Tangent t-metric Scoring"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        report.columns = SCORE_COLUMNS
        ref_path = options.get("ref")
        dist_paths = list(options.get("dists") or [])
        if not ref_path or not dist_paths:
            report.add(item_error("config", "a reference and at least one distorted image are required"))
            return report
        run = self.ctx.run
        interp = Interp(run.interp)

        ref = self.load_erp(ref_path)
        layout = self.layout_for(ref)
        ref_views = render_all_views(ref, layout, interp, workers=run.threads)

        results = []
        scored = 0
        with self.plugin_registry() or nullcontext() as registry:
            suite = self.metric_suite(registry)
            metrics = self.metric_ids(suite)
            for dist_path in dist_paths:
                try:
                    dist = self.load_erp(dist_path)
                    outcomes = evaluate_outcomes(
                        ref, dist, layout, metrics, suite,
                        interp=interp,
                        workers=run.threads,
                        weighted=run.weighted_mean,
                        ref_views=ref_views,
                    )
                except TangentIqaError as exc:
                    report.add(error_item(exc, dist=dist_path))
                    report.rows.append({"dist": dist_path, "status": f"error: {exc}"})
                    continue
                for outcome in outcomes:
                    if isinstance(outcome, TMetricReport):
                        scored += 1
                    else:
                        report.add(error_item(outcome, dist=dist_path))
                results.append(score_document(ref_path, dist_path, layout, outcomes))
                report.rows.extend(score_rows(dist_path, outcomes))
                self.ctx.logger.info("Scored %s", dist_path, extra={"tiqa_metrics": len(metrics)})

        report.payload = {
            "ref": ref_path,
            "level": layout.level,
            "view_dim": layout.view_dim,
            "results": results,
        }
        report.summary = {
            "dists": len(dist_paths),
            "metrics": len(run.metrics),
            "reports": scored,
            "failed": sum(1 for item in report.items if item.severity == "error"),
        }
        validate_json(report.to_dict(), self.ctx.cfg.schema_dir / "score_report.schema.json")
        return report
