"""Subprocess adapter for metrics implemented outside the package.

A plugin is any executable invoked as ``<cmd> <ref_path> <dist_path>`` that
prints one decimal score on stdout and exits 0.
"""

import math
import re
import shlex
import shutil
import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from core.config import PluginSpec
from core.errors import PluginError
from core.imageio import write_image
from core.logging import get_logger
from iqa.metrics import MetricDescriptor, MetricId, MetricScore, Polarity

SCORE_RE = re.compile(r"^-?[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?\s*$")
DEFAULT_TIMEOUT = 120.0

log = get_logger(__name__)


def parse_score(name: str, stdout: str, stderr: str = "") -> float:
    text = stdout.strip()
    if not SCORE_RE.match(text):
        raise PluginError(name, f"unparsable output {stdout[:80]!r}", stderr=stderr)
    value = float(text)
    if not math.isfinite(value):
        raise PluginError(name, f"non-finite score {text}", stderr=stderr)
    return value


def run_external(
    name: str,
    ref_path: Union[str, Path],
    dist_path: Union[str, Path],
    timeout: float = DEFAULT_TIMEOUT,
    cmd: Optional[str] = None,
) -> MetricScore:
    """Run one plugin on an image pair stored on disk."""
    argv = shlex.split(cmd if cmd is not None else name) + [str(ref_path), str(dist_path)]
    try:
        result = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, check=False)
    except subprocess.TimeoutExpired as exc:
        stderr = exc.stderr.decode(errors="replace") if isinstance(exc.stderr, bytes) else (exc.stderr or "")
        raise PluginError(name, f"timed out after {timeout:g}s", stderr=stderr, timed_out=True) from exc
    except OSError as exc:
        raise PluginError(name, f"cannot start {argv[0]}: {exc}") from exc
    if result.returncode != 0:
        raise PluginError(name, f"exit code {result.returncode}", stderr=result.stderr)
    return MetricScore(MetricId(name, external=True), parse_score(name, result.stdout, result.stderr))


class PluginRegistry:
    """Registered plugins keyed by metric name; one child process per plugin at a time."""

    def __init__(
        self,
        specs: Mapping[str, PluginSpec],
        work_dir: Union[str, Path],
        default_timeout: float = DEFAULT_TIMEOUT,
        keep_temp: bool = False,
    ) -> None:
        self.specs = dict(specs)
        self.default_timeout = default_timeout
        self.keep_temp = keep_temp
        Path(work_dir).mkdir(parents=True, exist_ok=True)
        self.run_dir = Path(tempfile.mkdtemp(prefix="run_", dir=str(work_dir)))
        self._locks = {name: threading.Lock() for name in self.specs}
        self._counter = 0
        self._counter_lock = threading.Lock()

    def __enter__(self) -> "PluginRegistry":
        return self

    def __exit__(self, *_exc: Any) -> None:
        self.close()

    def close(self) -> None:
        if self.keep_temp:
            log.info("Keeping plugin temp files", extra={"tiqa_path": str(self.run_dir)})
            return
        shutil.rmtree(self.run_dir, ignore_errors=True)

    def _spec(self, name: str) -> PluginSpec:
        spec = self.specs.get(name)
        if spec is None:
            raise PluginError(name, "not registered (set metric.<name>.cmd)")
        return spec

    def descriptor(self, name: str) -> MetricDescriptor:
        spec = self._spec(name)
        return MetricDescriptor(MetricId(name, external=True), Polarity.parse(spec.polarity))

    def _pair_dir(self, name: str, plane_index: Optional[int]) -> Path:
        with self._counter_lock:
            self._counter += 1
            serial = self._counter
        label = f"view{plane_index:04d}" if plane_index is not None else "pair"
        path = self.run_dir / name / f"{label}_{serial:06d}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def score_files(self, name: str, ref_path: Union[str, Path], dist_path: Union[str, Path]) -> MetricScore:
        spec = self._spec(name)
        timeout = spec.timeout if spec.timeout is not None else self.default_timeout
        with self._locks[name]:
            return run_external(name, ref_path, dist_path, timeout=timeout, cmd=spec.cmd)

    def score_views(self, name: str, ref: Any, dist: Any) -> MetricScore:
        """Write both views as 16-bit PNGs and score them through the plugin."""
        self._spec(name)
        pair_dir = self._pair_dir(name, getattr(ref, "plane_index", None))
        ref_path = pair_dir / "ref.png"
        dist_path = pair_dir / "dist.png"
        write_image(ref_path, getattr(ref, "data", ref), bit_depth=16)
        write_image(dist_path, getattr(dist, "data", dist), bit_depth=16)
        try:
            return self.score_files(name, ref_path, dist_path)
        finally:
            if not self.keep_temp:
                shutil.rmtree(pair_dir, ignore_errors=True)
