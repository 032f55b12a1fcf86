from typing import Any

from core.reports import Report
from iqa.resample import DegradeSpec, Kernel, degrade
from tools.base import BaseTool
from tools.utils import item_error, item_info


class DegradeErp(BaseTool):
    tool_id = "degrade"
    title = "ERP Downscaler"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        source = options.get("input")
        out_path = options.get("out")
        if not source or not out_path:
            report.add(item_error("config", "input and an output file (--out) are required"))
            return report

        spec = DegradeSpec(
            scale=int(options.get("scale", 4)),
            kernel=Kernel(options.get("kernel", Kernel.BICUBIC.value)),
            sigma=options.get("sigma"),
        )
        img = self.load_erp(source)
        low = degrade(img, spec)
        low.save(out_path, bit_depth=int(options.get("bit_depth", 8)))

        report.add(item_info("export", f"Wrote {low.width}x{low.height} image to {out_path}"))
        report.summary = {
            "input": [img.width, img.height],
            "output": [low.width, low.height],
            "scale": spec.scale,
            "kernel": spec.kernel.value,
        }
        return report
