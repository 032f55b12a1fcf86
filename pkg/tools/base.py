from dataclasses import dataclass
from typing import Any, Optional

from core.config import Config, RunConfig
from core.errors import TangentIqaError
from core.logging import get_logger
from core.reports import Report
from iqa.geometry import TangentLayout, build_layout
from iqa.metrics import MetricId, MetricsConfig, MetricSuite
from iqa.plugins import PluginRegistry
from iqa.resample import ErpImage
from tools.utils import error_item


@dataclass
class ToolContext:
    cfg: Config
    run: RunConfig
    logger: Any


class BaseTool:
    tool_id = "base"
    title = "Base Tool"

    def __init__(self, ctx: ToolContext) -> None:
        self.ctx = ctx

    def run(self, options: dict[str, Any]) -> Report:
        raise NotImplementedError

    def execute(self, options: dict[str, Any]) -> Report:
        """Run the tool, turning domain errors into an error item on the report."""
        try:
            return self.run(options)
        except TangentIqaError as exc:
            self.ctx.logger.error("Tool failed: %s", exc)
            report = Report(tool_id=self.tool_id, title=self.title)
            report.add(error_item(exc))
            return report

    def new_report(self) -> Report:
        return Report(tool_id=self.tool_id, title=self.title)

    def load_erp(self, path: str) -> ErpImage:
        return ErpImage.load(path, allow_any_aspect=self.ctx.run.allow_any_aspect)

    def layout_for(self, img: ErpImage) -> TangentLayout:
        return build_layout(self.ctx.run.level, img.width, padding=self.ctx.run.padding)

    def plugin_registry(self) -> Optional[PluginRegistry]:
        run = self.ctx.run
        if not run.plugins:
            return None
        return PluginRegistry(
            run.plugins,
            self.ctx.cfg.cache_dir / "plugins",
            default_timeout=run.plugin_timeout,
            keep_temp=run.keep_temp,
        )

    def metric_suite(self, registry: Optional[PluginRegistry]) -> MetricSuite:
        return MetricSuite(config=MetricsConfig.from_sections(self.ctx.run.constants), external=registry)

    def metric_ids(self, suite: MetricSuite) -> list[MetricId]:
        return [suite.metric_id(name) for name in self.ctx.run.metrics]


def build_context(cfg: Config, run: RunConfig, tool_id: str = "generic") -> ToolContext:
    logger = get_logger("tool", tool_id=tool_id)
    return ToolContext(cfg=cfg, run=run, logger=logger)
