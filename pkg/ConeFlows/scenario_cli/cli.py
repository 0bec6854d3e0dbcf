import argparse
import itertools
import json
import logging
from multiprocessing import Pool
from pathlib import Path
from sys import stderr
from typing import Any, Optional

from pydantic import ValidationError

from ConeFlows import __version__
from ConeFlows.diagnostics import threshold_report
from ConeFlows.errors import ConeFlowsError, InvalidConfigError, RunAbortedError, SchemaVersionError
from ConeFlows.flow_engine import run
from ConeFlows.scenario_cli.checks import acceptance_checks
from ConeFlows.scenario_cli.config_parser import load_config, parse_config_tree, sweep_grid, with_overrides
from ConeFlows.scenario_cli.initial_curves import gen_initial, largest_compliant_amplitude
from ConeFlows.scenario_cli.series_io import read_series, write_series
from ConeFlows.scenario_cli.svg_emitter import emit_frames
from ConeFlows.schemas import ScenarioConfig, ThresholdReport

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_INVALID_CONFIG = 2
EXIT_ABORTED = 3

SERIES_FILE = "series.csv"
FRAMES_DIR = "frames"
SWEEP_INDEX = "sweep.json"
COMPLIANCE_MODE = 2


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def parse_grid(spec: str) -> list[dict[str, str]]:
    """`key=v1,v2;key2=w1,w2` into the cartesian product of overrides, in the order written."""
    axes = []
    errors = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, values = part.partition("=")
        values = [value.strip() for value in values.split(",") if value.strip()]
        if not sep or not key.strip() or not values:
            errors.append(f"grid: expected 'key=v1,v2', got '{part}'")
            continue
        axes.append((key.strip(), values))
    if errors:
        raise InvalidConfigError(errors)
    if not axes:
        raise InvalidConfigError(["grid: no axes given"])
    keys = [key for key, _ in axes]
    return [dict(zip(keys, combination)) for combination in itertools.product(*(values for _, values in axes))]


def execute(config: ScenarioConfig, directory: Path, frames: bool = True) -> int:
    """Run one scenario and write its series, sidecar and frames; partial outputs survive an abort."""
    directory = Path(directory)
    curve = gen_initial(config)
    report = threshold_report(config, curve)
    metadata = {
        "config": config.model_dump(mode="json", by_alias=True),
        "threshold_report": report.model_dump(mode="json"),
        "engine_version": __version__,
        "config_hash": config.config_hash(),
    }
    status = EXIT_OK
    try:
        result = run(config, curve)
    except RunAbortedError as exc:
        result, status = exc.result, EXIT_ABORTED
        metadata["aborted"] = str(exc.cause)

    write_series(result.series, directory / SERIES_FILE, metadata)
    if frames:
        emit_frames(result, config, directory / FRAMES_DIR)
    return status


def _sweep_worker(job: tuple[int, dict, dict[str, str], str, bool]) -> dict[str, Any]:
    index, tree, overrides, root, frames = job
    directory = Path(root) / f"run_{index:03d}"
    entry = {"index": index, "overrides": overrides, "directory": str(directory)}
    try:
        config = with_overrides(tree, overrides)
        entry["config_hash"] = config.config_hash()
        entry["status"] = execute(config, directory, frames)
    except InvalidConfigError as exc:
        LOGGER.error("sweep run %d: invalid config: %s", index, exc)
        entry.update(status=EXIT_INVALID_CONFIG, errors=exc.errors)
    except ConeFlowsError as exc:
        LOGGER.error("sweep run %d failed: %s", index, exc)
        entry.update(status=EXIT_ABORTED, errors=[str(exc)])
    return entry


def cmd_run(args) -> int:
    config = load_config(args.config)
    status = execute(config, Path(args.output), frames=not args.no_frames)
    LOGGER.info("run written to %s (exit %d)", args.output, status)
    return status


def cmd_sweep(args) -> int:
    tree = parse_config_tree(Path(args.config).read_text(encoding="utf-8"))
    spec = args.grid or sweep_grid(tree)
    if not spec:
        raise InvalidConfigError(["grid: give --grid or a sweep.grid entry in the scenario file"])
    grid = parse_grid(spec)
    jobs = [(index, tree, overrides, args.output, not args.no_frames) for index, overrides in enumerate(grid)]
    LOGGER.info("sweep: %d runs on %d workers", len(jobs), args.jobs)
    if args.jobs == 1:
        entries = [_sweep_worker(job) for job in jobs]
    else:
        with Pool(processes=args.jobs) as pool:
            entries = pool.map(_sweep_worker, jobs)

    index_path = Path(args.output) / SWEEP_INDEX
    index_path.parent.mkdir(parents=True, exist_ok=True)
    index_path.write_text(json.dumps(entries, indent=2, sort_keys=True), encoding="utf-8")
    failures = [entry for entry in entries if entry["status"] != EXIT_OK]
    if failures:
        _print_json({"failures": failures})
    return max((entry["status"] for entry in entries), default=EXIT_OK)


def cmd_check(args) -> int:
    config = load_config(args.config)
    report = threshold_report(config, gen_initial(config))
    amplitude = largest_compliant_amplitude(config, j=COMPLIANCE_MODE)
    _print_json({
        "threshold_report": report.model_dump(mode="json"),
        "largest_compliant_amplitude": {"j": COMPLIANCE_MODE, "a": amplitude},
    })
    return EXIT_OK


def cmd_report(args) -> int:
    directory = Path(args.input)
    series = read_series(directory / SERIES_FILE)
    config = ScenarioConfig.model_validate(series.metadata["config"])
    report = ThresholdReport.model_validate(series.metadata["threshold_report"])
    checks = acceptance_checks(series, config, report)
    failures = [check.name for check in checks if check.asserted and not check.passed]
    _print_json({"checks": [check.model_dump(mode="json") for check in checks], "failures": failures})
    return EXIT_CHECKS_FAILED if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coneflows", description="Elastic flows of curves in a cone.")
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="integrate one scenario")
    run_parser.add_argument("-c", "--config", required=True)
    run_parser.add_argument("-o", "--output", required=True)
    run_parser.add_argument("--no-frames", action="store_true", help="skip SVG frames")

    sweep_parser = commands.add_parser("sweep", help="integrate a grid of scenarios in parallel")
    sweep_parser.add_argument("-c", "--config", required=True)
    sweep_parser.add_argument("--grid", help="key=v1,v2;key2=w1,w2 (default: sweep.grid of the scenario file)")
    sweep_parser.add_argument("--jobs", type=int, default=1)
    sweep_parser.add_argument("-o", "--output", default="sweep")
    sweep_parser.add_argument("--no-frames", action="store_true", help="skip SVG frames")

    check_parser = commands.add_parser("check", help="print the threshold report without running")
    check_parser.add_argument("-c", "--config", required=True)

    report_parser = commands.add_parser("report", help="evaluate the acceptance checks on a finished run")
    report_parser.add_argument("-i", "--input", required=True)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    # stdout carries the JSON results, so logs go to stderr
    logging.basicConfig(level=logging.INFO, stream=stderr)
    args = build_parser().parse_args(argv)
    try:
        match args.command:
            case "run":
                return cmd_run(args)
            case "sweep":
                return cmd_sweep(args)
            case "check":
                return cmd_check(args)
            case "report":
                return cmd_report(args)
    except InvalidConfigError as exc:
        LOGGER.error("invalid configuration: %s", exc)
        _print_json({"errors": exc.errors})
        return EXIT_INVALID_CONFIG
    except ValidationError as exc:
        LOGGER.error("invalid configuration: %s", exc)
        _print_json({"errors": [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]})
        return EXIT_INVALID_CONFIG
    except (OSError, KeyError, SchemaVersionError) as exc:
        LOGGER.error("cannot read input: %s", exc)
        _print_json({"errors": [str(exc)]})
        return EXIT_INVALID_CONFIG
    except ConeFlowsError as exc:
        LOGGER.error("%s failed: %s", args.command, exc)
        _print_json({"errors": [str(exc)]})
        return EXIT_ABORTED
    return EXIT_INVALID_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
