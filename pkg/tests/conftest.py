import logging
import shlex
import stat
import sys
from pathlib import Path

import numpy as np
import pytest

from core.config import get_config
from iqa.resample import ErpImage
from iqa.synthetic import make_pattern


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Point every config/log/cache directory at the test's tmp dir."""
    home = tmp_path / "home"
    monkeypatch.setenv("TANGENT_IQA_HOME", str(home))
    monkeypatch.setenv("TANGENT_IQA_LOGS", str(home / "logs"))
    monkeypatch.setenv("TANGENT_IQA_CACHE", str(home / "cache"))
    monkeypatch.delenv("TANGENT_IQA_CONFIG", raising=False)
    monkeypatch.delenv("TANGENT_IQA_LOG_LEVEL", raising=False)
    get_config(refresh=True)
    yield home
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    get_config(refresh=True)


@pytest.fixture
def erp():
    def build(kind: str = "noise", width: int = 384, seed: int = 0) -> ErpImage:
        return make_pattern(kind, width, seed=seed)

    return build


@pytest.fixture
def texture():
    """256x256 luma crop of the seeded natural-statistics pattern."""
    img = make_pattern("noise", 512, seed=7)
    return img.as_float64()[:, 128:384].mean(axis=2)


@pytest.fixture
def constant_erp():
    def build(value: float = 0.5, width: int = 64, channels: int = 3) -> ErpImage:
        return ErpImage(np.full((width // 2, width, channels), value))

    return build


@pytest.fixture
def stub_plugin(tmp_path):
    """Write an executable plugin script printing ``output`` and exiting with ``code``."""

    def build(output: str = "0.5", code: int = 0, sleep: float = 0.0, name: str = "stub") -> str:
        script = tmp_path / f"{name}.py"
        script.write_text(
            "import sys, time\n"
            f"time.sleep({sleep!r})\n"
            "assert len(sys.argv) == 3\n"
            f"sys.stdout.write({output!r})\n"
            "sys.stderr.write('stub stderr')\n"
            f"sys.exit({code})\n",
            encoding="utf-8",
        )
        script.chmod(script.stat().st_mode | stat.S_IEXEC)
        return shlex.join([sys.executable, str(script)])

    return build


@pytest.fixture
def votes_csv(tmp_path):
    def build(rows: list[str], name: str = "votes.csv") -> Path:
        path = tmp_path / name
        path.write_text("scene,method_a,method_b,votes_a,votes_b,ties\n" + "\n".join(rows) + "\n", encoding="utf-8")
        return path

    return build
