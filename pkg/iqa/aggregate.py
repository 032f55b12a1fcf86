"""Per-view scoring fan-out and t-metric pooling."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

from core.errors import AggregationError, LayoutError, MetricEvaluationError, ShapeError
from core.logging import get_logger
from iqa.geometry import BASE_FACES, TangentLayout
from iqa.metrics import MetricDescriptor, MetricId, MetricScore, MetricSuite, score_pair
from iqa.resample import ErpImage, Interp, TangentView, render_all_views

log = get_logger(__name__)


def level_for_count(count: int) -> int:
    """Inverse of view_count; LayoutError unless count == 20 * 4**b."""
    if count < BASE_FACES or count % BASE_FACES:
        raise LayoutError(f"{count} views is not a tangent layout size (20 * 4^b)")
    rest = count // BASE_FACES
    level = 0
    while rest > 1:
        if rest % 4:
            raise LayoutError(f"{count} views is not a tangent layout size (20 * 4^b)")
        rest //= 4
        level += 1
    return level


@dataclass(frozen=True)
class TMetricReport:
    metric: MetricDescriptor
    level: int
    per_view: tuple[tuple[int, float], ...]
    t_value: float
    minimum: float
    maximum: float
    stddev: float
    weighted: bool = False

    @property
    def values(self) -> list[float]:
        return [value for _, value in self.per_view]

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": str(self.metric.id),
            "polarity": self.metric.polarity.value,
            "t_value": self.t_value,
            "min": self.minimum,
            "max": self.maximum,
            "stddev": self.stddev,
            "weighted": self.weighted,
            "per_view": self.values,
        }


def t_metric(
    scores: Sequence[MetricScore],
    descriptor: Optional[MetricDescriptor] = None,
    weights: Optional[Sequence[float]] = None,
) -> TMetricReport:
    """Mean of per-view scores ordered by plane index.

    ``weights`` (face solid angles) switch to a weighted mean; min, max and
    stddev always describe the unweighted per-view values.
    """
    if not scores:
        raise AggregationError("No scores to aggregate")
    metric_id = scores[0].id
    mixed = sorted({str(s.id) for s in scores if s.id != metric_id})
    if mixed:
        raise AggregationError(f"Mixed metrics in one aggregate: {metric_id} and {', '.join(mixed)}")
    level = level_for_count(len(scores))
    if descriptor is None:
        descriptor = MetricSuite().descriptor(metric_id)
    elif descriptor.id != metric_id:
        raise AggregationError(f"Descriptor {descriptor.id} does not match scores of {metric_id}")

    values = [score.value for score in scores]
    count = len(values)
    mean = math.fsum(values) / count
    if weights is not None:
        if len(weights) != count:
            raise LayoutError(f"{len(weights)} weights for {count} views")
        total = math.fsum(weights)
        t_value = math.fsum(w * v for w, v in zip(weights, values)) / total
    else:
        t_value = mean
    lo, hi = min(values), max(values)
    t_value = min(max(t_value, lo), hi)
    stddev = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / count)
    return TMetricReport(
        metric=descriptor,
        level=level,
        per_view=tuple(enumerate(values)),
        t_value=t_value,
        minimum=lo,
        maximum=hi,
        stddev=stddev,
        weighted=weights is not None,
    )


MetricOutcome = Union[TMetricReport, MetricEvaluationError]


def _score_task(
    suite: MetricSuite, metric: MetricId, ref: TangentView, dist: TangentView
) -> Union[MetricScore, MetricEvaluationError]:
    try:
        return score_pair(ref, dist, metric, suite)
    except Exception as exc:
        return MetricEvaluationError(str(metric), ref.plane_index, exc)


def score_views(
    ref_views: Sequence[TangentView],
    dist_views: Sequence[TangentView],
    layout: TangentLayout,
    metrics: Sequence[MetricId],
    suite: Optional[MetricSuite] = None,
    workers: int = 1,
    weighted: bool = False,
) -> list[MetricOutcome]:
    """Score every (metric, view) pair and pool per metric, in metric order.

    A metric with any failing view yields its first error (lowest plane
    index) instead of a partial mean.
    """
    suite = suite or MetricSuite()
    if len(ref_views) != len(dist_views):
        raise ShapeError(f"{len(ref_views)} reference views vs {len(dist_views)} distorted views")
    tasks = [(metric, ref, dist) for metric in metrics for ref, dist in zip(ref_views, dist_views)]
    if workers <= 1:
        results = [_score_task(suite, *task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda task: _score_task(suite, *task), tasks))

    weights = list(layout.solid_angles) if weighted and layout.solid_angles is not None else None
    outcomes: list[MetricOutcome] = []
    per_metric = len(ref_views)
    for k, metric in enumerate(metrics):
        chunk = results[k * per_metric:(k + 1) * per_metric]
        failure = next((r for r in chunk if isinstance(r, MetricEvaluationError)), None)
        if failure is not None:
            log.warning("Metric failed", extra={"tiqa_metric": str(metric), "tiqa_view": failure.plane_index})
            outcomes.append(failure)
            continue
        outcomes.append(t_metric(chunk, suite.descriptor(metric), weights=weights))
    return outcomes


def evaluate_outcomes(
    ref: ErpImage,
    dist: ErpImage,
    layout: TangentLayout,
    metrics: Sequence[MetricId],
    suite: Optional[MetricSuite] = None,
    interp: Interp = Interp.BICUBIC,
    workers: int = 1,
    weighted: bool = False,
    ref_views: Optional[Sequence[TangentView]] = None,
) -> list[MetricOutcome]:
    if ref.data.shape != dist.data.shape:
        raise ShapeError(f"Reference {ref.width}x{ref.height}x{ref.channels} vs distorted {dist.width}x{dist.height}x{dist.channels}")
    if ref_views is None:
        ref_views = render_all_views(ref, layout, interp, workers=workers)
    dist_views = render_all_views(dist, layout, interp, workers=workers)
    return score_views(ref_views, dist_views, layout, metrics, suite, workers=workers, weighted=weighted)


def evaluate_odi(
    ref: ErpImage,
    dist: ErpImage,
    layout: TangentLayout,
    metrics: Sequence[MetricId],
    suite: Optional[MetricSuite] = None,
    interp: Interp = Interp.BICUBIC,
    workers: int = 1,
    weighted: bool = False,
) -> list[TMetricReport]:
    """t-metric reports for one distorted ODI; raises the first metric failure."""
    reports = []
    for outcome in evaluate_outcomes(ref, dist, layout, metrics, suite, interp, workers, weighted):
        if isinstance(outcome, MetricEvaluationError):
            raise outcome
        reports.append(outcome)
    return reports


def score_document(
    ref_name: str,
    dist_name: str,
    layout: TangentLayout,
    outcomes: Sequence[MetricOutcome],
) -> dict[str, Any]:
    return {
        "ref": ref_name,
        "dist": dist_name,
        "level": layout.level,
        "view_dim": layout.view_dim,
        "reports": [o.to_dict() for o in outcomes if isinstance(o, TMetricReport)],
        "errors": [
            {"metric": o.metric, "plane_index": o.plane_index, "message": str(o.cause)}
            for o in outcomes
            if isinstance(o, MetricEvaluationError)
        ],
    }


def score_rows(dist_name: str, outcomes: Sequence[MetricOutcome]) -> list[dict[str, Any]]:
    """Flat CSV rows, one per (dist, metric)."""
    rows = []
    for outcome in outcomes:
        if isinstance(outcome, TMetricReport):
            rows.append({
                "dist": dist_name,
                "metric": str(outcome.metric.id),
                "polarity": outcome.metric.polarity.value,
                "t_value": outcome.t_value,
                "min": outcome.minimum,
                "max": outcome.maximum,
                "stddev": outcome.stddev,
                "status": "ok",
            })
        else:
            rows.append({
                "dist": dist_name,
                "metric": outcome.metric,
                "polarity": "",
                "t_value": "",
                "min": "",
                "max": "",
                "stddev": "",
                "status": f"error: {outcome.cause}",
            })
    return rows
