from typing import Any

from core.reports import Report
from iqa.resample import Kernel, upsample
from tools.base import BaseTool
from tools.utils import item_error, item_info


class UpsampleErp(BaseTool):
    tool_id = "upsample"
    title = "ERP Upscaler"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        source = options.get("input")
        out_path = options.get("out")
        if not source or not out_path:
            report.add(item_error("config", "input and an output file (--out) are required"))
            return report

        scale = int(options.get("scale", 4))
        kernel = Kernel(options.get("kernel", Kernel.BICUBIC.value))
        img = self.load_erp(source)
        high = upsample(img, scale, kernel)
        high.save(out_path, bit_depth=int(options.get("bit_depth", 8)))

        report.add(item_info("export", f"Wrote {high.width}x{high.height} image to {out_path}"))
        report.summary = {
            "input": [img.width, img.height],
            "output": [high.width, high.height],
            "scale": scale,
            "kernel": kernel.value,
        }
        return report
