from pathlib import Path
from typing import Any

from core.fs import ensure_dir, save_json
from core.jsonschema import validate_json
from core.reports import Report
from iqa.resample import Interp, render_all_views
from tools.base import BaseTool
from tools.utils import item_error, item_info, view_filename


class TangentViews(BaseTool):
    tool_id = "tangents"
    title = "Tangent View Renderer"

    def run(self, options: dict[str, Any]) -> Report:
        report = self.new_report()
        source = options.get("input")
        out_dir = options.get("out_dir")
        if not source or not out_dir:
            report.add(item_error("config", "input and an output directory (--out) are required"))
            return report
        run = self.ctx.run
        out_dir = Path(out_dir)
        ensure_dir(out_dir)

        img = self.load_erp(source)
        layout = self.layout_for(img)
        self.ctx.logger.info(
            "Rendering %d views of %dpx", len(layout.planes), layout.view_dim,
            extra={"tiqa_level": layout.level},
        )
        views = render_all_views(img, layout, Interp(run.interp), workers=run.threads)

        for view in views:
            view.save(out_dir / view_filename(view.plane_index))
            report.rows.append({
                "index": view.plane_index,
                "file": view_filename(view.plane_index),
                "fov": layout.planes[view.plane_index].fov,
            })

        document = layout.to_dict()
        document.update(
            erp_width=img.width,
            erp_height=img.height,
            padding=run.padding,
            interp=Interp(run.interp).value,
        )
        for index, plane in enumerate(document["planes"]):
            plane["index"] = index
            plane["file"] = view_filename(index)
            if layout.solid_angles is not None:
                plane["solid_angle"] = float(layout.solid_angles[index])
        validate_json(document, self.ctx.cfg.schema_dir / "layout.schema.json")
        save_json(out_dir / "layout.json", document)

        report.add(item_info("export", f"Wrote {len(views)} views and layout.json to {out_dir}"))
        report.summary = {"views": len(views), "view_dim": layout.view_dim, "level": layout.level}
        return report
