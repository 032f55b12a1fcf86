from typing import Any

from core.errors import DomainError
from core.reports import Report
from iqa.resample import Kernel
from iqa.synthetic import add_noise, gaussian_blur, round_trip
from tools.base import BaseTool
from tools.utils import item_error, item_info

DISTORTIONS = ("blur", "noise", "bicubic", "nearest")


class DistortErp(BaseTool):
    tool_id = "distort"
    title = "ERP Distortion Generator"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        source = options.get("input")
        out_path = options.get("out")
        if not source or not out_path:
            report.add(item_error("config", "input and an output file (--out) are required"))
            return report
        kind = options.get("kind", "blur")
        if kind not in DISTORTIONS:
            raise DomainError(f"Unknown distortion {kind}; expected one of {', '.join(DISTORTIONS)}")

        img = self.load_erp(source)
        sigma = options.get("sigma")
        scale = int(options.get("scale", 4))
        seed = self.ctx.run.seed
        if kind == "blur":
            out = gaussian_blur(img, 2.0 if sigma is None else float(sigma))
        elif kind == "noise":
            out = add_noise(img, 0.05 if sigma is None else float(sigma), seed=seed)
        else:
            out = round_trip(img, scale, Kernel(kind))
        out.save(out_path, bit_depth=int(options.get("bit_depth", 8)))

        report.add(item_info("export", f"Wrote {kind} distortion to {out_path}"))
        report.summary = {"kind": kind, "sigma": sigma, "scale": scale, "seed": seed}
        return report
