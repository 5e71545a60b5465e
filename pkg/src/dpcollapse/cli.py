"""Command line entry point: ``dpcollapse run|oracle|check|presets|echo-config``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenario import (
    FORMATS,
    PRESETS,
    WEIGHTINGS,
    ComputationError,
    ConfigError,
    ScenarioConfig,
    config_to_yaml,
    emit_report,
    parse_scenario,
    preset_config,
    run_scenario,
    with_overrides,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", type=Path, help="YAML scenario file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")


def _add_knobs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=FORMATS, default=None, help="report format (default: table)")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    p.add_argument("--convention", type=float, default=None, help="prefactor applied to G (e.g. 12.566 for 4*pi)")
    p.add_argument("--weighting", choices=WEIGHTINGS, default=None, help="branch mass assignment")
    p.add_argument("--output", type=Path, default=None, help="write to file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpcollapse",
        description="Gravitational and electrostatic instability energies of spatial superpositions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute a scenario report (closed form preferred)")
    _add_source(run)
    _add_knobs(run)
    oracle = sub.add_parser("oracle", help="compute a scenario with every integral done by Monte Carlo")
    _add_source(oracle)
    _add_knobs(oracle)
    check = sub.add_parser("check", help="validate a scenario without running it")
    _add_source(check)
    _add_knobs(check)
    echo = sub.add_parser("echo-config", help="print the resolved scenario as canonical YAML")
    _add_source(echo)
    _add_knobs(echo)
    sub.add_parser("presets", help="list built-in scenarios")
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.preset is not None:
        cfg = preset_config(args.preset)
    else:
        try:
            text = args.scenario.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from None
        cfg = parse_scenario(text)
    return with_overrides(
        cfg,
        output_format=args.format,
        mc_samples=args.samples,
        seed=args.seed,
        convention_factor=args.convention,
        weighting=args.weighting,
    )


def _write(data: bytes, output: Path | None) -> None:
    if output is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        output.write_bytes(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name:20s} {PRESETS[name]['description']}")
        return EXIT_OK
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "check":
        print(f"ok: {cfg.name}")
        return EXIT_OK
    if args.command == "echo-config":
        _write(config_to_yaml(cfg).encode(), args.output)
        return EXIT_OK
    try:
        report = run_scenario(cfg, oracle=args.command == "oracle")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _write(emit_report(report, cfg.output_format), args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
