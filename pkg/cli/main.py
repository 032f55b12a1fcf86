import argparse
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from core.config import RunConfig, ensure_dirs, get_config, load_run_config
from core.errors import ConfigError
from core.fs import atomic_write
from core.logging import get_logger, setup_logging
from core.reports import Report
from tools.base import build_context
from tools.registry import TOOL_REGISTRY

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# commands whose --out is a file or directory they produce; the report goes to stdout
PRODUCERS = {"tangents", "degrade", "upsample", "synth", "distort"}


def _global_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    group = flags.add_argument_group("run options")
    group.add_argument("--config", help="key = value run config (falls back to $TANGENT_IQA_CONFIG)")
    group.add_argument("--level", type=int, help="icosahedron subdivision level b (default 1)")
    group.add_argument("--metrics", help="comma-separated metric names (default: all built-ins)")
    group.add_argument("--threads", type=int, help="worker threads (default: CPU count)")
    group.add_argument("--format", choices=["json", "csv"], help="report format (default json)")
    group.add_argument("--out", help="output path")
    group.add_argument("--seed", type=int, help="seed for every random choice")
    group.add_argument("--alpha", type=float, help="significance level for verdicts (default 0.06)")
    group.add_argument("--padding", type=float, help="tangent view field-of-view padding (default 1.3)")
    group.add_argument("--interp", choices=["bilinear", "bicubic"], help="view sampling filter")
    group.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    group.add_argument("--keep-temp", action="store_true", default=None, help="keep plugin temp files")
    group.add_argument("--allow-any-aspect", action="store_true", default=None, help="accept non-2:1 ERPs")
    group.add_argument("--weighted", action="store_true", default=None, help="solid-angle weighted t-metric")
    return flags


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(prog="tangent-iqa", description="Tangent-view quality assessment for 360 images")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("list", help="List available commands")

    tangents = sub.add_parser("tangents", parents=[flags], help="Render tangent views and layout.json")
    tangents.add_argument("input", help="equirectangular image")

    score = sub.add_parser("score", parents=[flags], help="t-metric scores of distorted ERPs")
    score.add_argument("ref", help="reference ERP")
    score.add_argument("dists", nargs="+", help="distorted ERPs")

    for name, helptext in (("degrade", "Downscale an ERP"), ("upsample", "Upscale an ERP")):
        resize = sub.add_parser(name, parents=[flags], help=helptext)
        resize.add_argument("input", help="equirectangular image")
        resize.add_argument("--scale", type=int, default=4, help="integer factor (default 4)")
        kernels = ["bicubic", "bilinear", "nearest", "gaussian"] if name == "degrade" else ["bicubic", "bilinear", "nearest"]
        resize.add_argument("--kernel", choices=kernels, default="bicubic")
        resize.add_argument("--bit-depth", type=int, choices=[8, 16], default=8)
        if name == "degrade":
            resize.add_argument("--sigma", type=float, help="gaussian kernel sigma in source pixels")

    compare = sub.add_parser("compare", parents=[flags], help="Objective preference table")
    compare.add_argument("scores", help="CSV with scene,method,metric,value[,polarity]")
    compare.add_argument("--votes", help="vote CSV for the subjective row and agreement")
    compare.add_argument("--polarity", action="append", default=[], metavar="METRIC=higher|lower")

    subjective = sub.add_parser("subjective", parents=[flags], help="Preference probabilities, verdicts, Bradley-Terry")
    subjective.add_argument("votes", help="CSV with scene,method_a,method_b,votes_a,votes_b,ties")
    subjective.add_argument("--n", type=int, help="participants per pair (default: most common row total)")

    synth = sub.add_parser("synth", parents=[flags], help="Generate a seeded synthetic ERP")
    synth.add_argument("pattern", choices=["gradient", "checker", "noise", "ramp", "poles"])
    synth.add_argument("--width", type=int, default=1024)
    synth.add_argument("--bit-depth", type=int, choices=[8, 16], default=8)

    distort = sub.add_parser("distort", parents=[flags], help="Apply a blur, noise or resampling round trip")
    distort.add_argument("input", help="equirectangular image")
    distort.add_argument("kind", choices=["blur", "noise", "bicubic", "nearest"])
    distort.add_argument("--sigma", type=float, help="blur or noise sigma")
    distort.add_argument("--scale", type=int, default=4, help="round-trip factor")
    distort.add_argument("--bit-depth", type=int, choices=[8, 16], default=8)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "level": args.level,
        "metrics": args.metrics,
        "threads": args.threads,
        "format": args.format,
        "seed": args.seed,
        "alpha": args.alpha,
        "padding": args.padding,
        "interp": args.interp,
        "keep_temp": args.keep_temp,
        "allow_any_aspect": args.allow_any_aspect,
        "weighted_mean": args.weighted,
    }


def _parse_polarity(entries: Sequence[str]) -> dict[str, str]:
    parsed = {}
    for entry in entries:
        name, sep, value = entry.partition("=")
        if not sep or not name.strip() or not value.strip():
            raise ConfigError("polarity", f"expected METRIC=higher|lower, got {entry!r}")
        parsed[name.strip()] = value.strip()
    return parsed


def _options(args: argparse.Namespace) -> dict[str, Any]:
    command = args.command
    if command == "tangents":
        return {"input": args.input, "out_dir": args.out}
    if command == "score":
        return {"ref": args.ref, "dists": args.dists}
    if command == "degrade":
        return {"input": args.input, "out": args.out, "scale": args.scale, "kernel": args.kernel,
                "sigma": args.sigma, "bit_depth": args.bit_depth}
    if command == "upsample":
        return {"input": args.input, "out": args.out, "scale": args.scale, "kernel": args.kernel,
                "bit_depth": args.bit_depth}
    if command == "compare":
        return {"scores": args.scores, "votes": args.votes, "polarity": _parse_polarity(args.polarity)}
    if command == "subjective":
        return {"votes": args.votes, "n": args.n}
    if command == "synth":
        return {"pattern": args.pattern, "width": args.width, "out": args.out, "bit_depth": args.bit_depth}
    if command == "distort":
        return {"input": args.input, "kind": args.kind, "out": args.out, "sigma": args.sigma,
                "scale": args.scale, "bit_depth": args.bit_depth}
    raise ConfigError("command", f"unknown command {command}")


def _emit(report: Report, run: RunConfig, command: str, out: Optional[str]) -> None:
    text = report.render(run.format)
    if out and command not in PRODUCERS:
        atomic_write(Path(out), text)
        return
    sys.stdout.write(text)
    sys.stdout.flush()


def run_command(command: str, args: argparse.Namespace) -> int:
    cfg = get_config(refresh=True)
    ensure_dirs(cfg)
    setup_logging(cfg, level=args.log_level)
    logger = get_logger("cli", command=command)

    try:
        run = load_run_config(args.config or cfg.config_path, overrides=_overrides(args))
        options = _options(args)
    except ConfigError as exc:
        logger.error("Invalid configuration: %s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    ctx = build_context(cfg, run, tool_id=command)
    tool = TOOL_REGISTRY[command](ctx)
    try:
        report = tool.execute(options)
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_USAGE

    for item in report.items:
        if item.severity == "error":
            print(f"{item.category}: {item.message}", file=sys.stderr)
    _emit(report, run, command, args.out)
    logger.info("Command finished", extra={"tiqa_failed": report.failed})
    return EXIT_FAILED if report.failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for tool_id, tool_cls in TOOL_REGISTRY.items():
            print(f"{tool_id}\t{tool_cls.title}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    return run_command(args.command, args)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
