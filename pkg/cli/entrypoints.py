import sys

from cli.main import main


def _run_tool(tool_id: str) -> None:
    sys.exit(main([tool_id, *sys.argv[1:]]))


def tiqa_tangents() -> None:
    _run_tool("tangents")


def tiqa_score() -> None:
    _run_tool("score")


def tiqa_degrade() -> None:
    _run_tool("degrade")


def tiqa_upsample() -> None:
    _run_tool("upsample")


def tiqa_compare() -> None:
    _run_tool("compare")


def tiqa_subjective() -> None:
    _run_tool("subjective")


def tiqa_synth() -> None:
    _run_tool("synth")


def tiqa_distort() -> None:
    _run_tool("distort")
