from typing import Any

from core.reports import Report
from iqa.synthetic import Pattern, make_pattern
from tools.base import BaseTool
from tools.utils import item_error, item_info


class SynthesizeErp(BaseTool):
    tool_id = "synth"
    title = "Synthetic ERP Generator"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        out_path = options.get("out")
        if not out_path:
            report.add(item_error("config", "an output file (--out) is required"))
            return report
        pattern = Pattern(options.get("pattern", Pattern.NOISE.value))
        width = int(options.get("width", 1024))
        seed = self.ctx.run.seed
        img = make_pattern(pattern.value, width, options.get("height"), seed=seed)
        img.save(out_path, bit_depth=int(options.get("bit_depth", 8)))
        report.add(item_info("export", f"Wrote {pattern.value} pattern {img.width}x{img.height} to {out_path}"))
        report.summary = {"pattern": pattern.value, "width": img.width, "height": img.height, "seed": seed}
        return report
