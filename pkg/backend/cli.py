"""
Bell inequality workbench - command line interface

Exit codes: 0 success, 1 a check failed, 2 usage error.
"""

import argparse
import asyncio
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from bell_orchestrator import BellOrchestrator
from config import VERSION, OptimizationConfig, load_optimization_config, settings
from models.errors import BellError
from models.reports import RunManifest
from services.catalog import catalog
from services.optimizer import crossing_bracket, locate_crossing
from services.serialization import comparison_csv, sweep_csv, write_manifest
from utils.plotting import plot_sweeps

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bell",
        description="Classical bounds, facet certificates and quantum violations "
                    "of three-party qudit Bell inequalities",
    )
    parser.add_argument("--seed", type=int, default=None, help="optimizer / sampling seed")
    parser.add_argument("--config", type=Path, default=None, help="KEY=value optimizer config file")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list inequality identifiers")
    p.add_argument("--form", choices=["probability", "correlation"])
    p.add_argument("--d", type=int)

    p = sub.add_parser("bound", help="exact classical maximum")
    p.add_argument("name")

    p = sub.add_parser("tight", help="facet certificate")
    p.add_argument("name")
    p.add_argument("--out", type=Path)
    p.add_argument("--unsafe-large", action="store_true", help="lift the MAX_FACET_D guard")

    p = sub.add_parser("violate", help="quantum value on a named state")
    p.add_argument("name")
    p.add_argument("--state", choices=["ghz", "w", "product"], default="ghz")
    p.add_argument("--settings", choices=["reference", "optimize"], default="reference")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("ghz4-table", help="GHZ_4 modular table at the d=4 settings vs reference")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("sweep", help="optimized violation along a state family")
    p.add_argument("names", nargs="+", metavar="NAME")
    p.add_argument("--family", choices=["ghz", "w"], default="ghz")
    p.add_argument("--beta", type=float, action="append", help="W-family parameter, repeatable")
    p.add_argument("--grid", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--plot", type=Path)
    p.add_argument("--restarts", type=int)
    p.add_argument("--crossing", action="store_true", help="bisect the first violation onset")

    p = sub.add_parser("reduce-check", help="qubit reduction and equivalence checks")
    p.add_argument("--self-test", action="store_true", help="add a corrupted-coefficient control")

    p = sub.add_parser("thresholds", help="noise thresholds of the headline violations")
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("probe", help="entangled-state violation probe")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--name", default="corr-quartit-qubit")
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


class _Run:
    """Per-invocation context: parsed arguments, optimizer config, orchestrator"""

    def __init__(self, args: argparse.Namespace, argv: List[str]):
        self.args = args
        self.argv = argv
        self.started = time.monotonic()
        self.config: OptimizationConfig = load_optimization_config(
            args.config,
            seed=args.seed,
            threads=args.threads,
            restarts=getattr(args, "restarts", None),
        )
        self.orchestrator = BellOrchestrator(threads=self.config.threads)
        asyncio.run(self.orchestrator.initialize())

    def manifest(self, artifacts: List[Path]) -> RunManifest:
        return RunManifest(
            command=self.args.command,
            argv=self.argv,
            seed=self.config.seed,
            version=VERSION,
            duration_seconds=round(time.monotonic() - self.started, 3),
            artifacts=[str(a) for a in artifacts],
        )

    def emit(self, artifact: Path, text: str):
        artifact.write_text(text, encoding="utf-8")
        write_manifest(self.manifest([artifact]), artifact)
        logger.info(f"Wrote {artifact}")


def cmd_catalog(run: _Run) -> int:
    for entry in run.orchestrator.list_catalog(form=run.args.form, d=run.args.d):
        dim = "-" if entry.d is None else str(entry.d)
        print(f"{entry.name:32s} {entry.form:12s} d={dim:2s} bound={entry.bound}")
    return EXIT_OK


def cmd_bound(run: _Run) -> int:
    report = run.orchestrator.bound(run.args.name)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.is_valid else EXIT_CHECK_FAILED


def cmd_tight(run: _Run) -> int:
    report = run.orchestrator.tight(run.args.name, allow_large=run.args.unsafe_large, out=run.args.out)
    if run.args.out is not None:
        write_manifest(run.manifest([run.args.out]), run.args.out)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.is_facet else EXIT_CHECK_FAILED


def cmd_violate(run: _Run) -> int:
    report = run.orchestrator.violate(
        run.args.name,
        state=run.args.state,
        settings_mode=run.args.settings,
        noise=run.args.noise,
        config=run.config,
    )
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_ghz4_table(run: _Run) -> int:
    report = run.orchestrator.ghz4_table()
    text = comparison_csv(report.rows)
    if run.args.out is not None:
        run.emit(run.args.out, text)
    else:
        sys.stdout.write(text)
    print(f"lhs={report.lhs:.12g} max_delta={report.max_delta:.3e} matches={str(report.matches).lower()}")
    return EXIT_OK if report.matches else EXIT_CHECK_FAILED


def cmd_sweep(run: _Run) -> int:
    args = run.args
    series = run.orchestrator.sweep_series(
        args.names, args.family, betas=args.beta or (), grid_points=args.grid, config=run.config
    )
    text = sweep_csv(row for s in series for row in s.rows)
    if args.out is not None:
        run.emit(args.out, text)
    else:
        sys.stdout.write(text)

    if args.plot is not None:
        plot_sweeps({s.label: s.rows for s in series}, args.plot, title=f"{args.family} family")
        write_manifest(run.manifest([args.plot]), args.plot)

    if args.crossing:
        for s in series:
            bracket = crossing_bracket(s.rows)
            if bracket is None:
                logger.warning(f"{s.label}: no violation onset on the grid")
                continue
            xi = locate_crossing(args.family, catalog(s.name), *bracket, config=run.config, beta=s.beta)
            print(f"crossing {s.label} xi={xi:.9f}")
    return EXIT_OK


def cmd_reduce_check(run: _Run) -> int:
    results = run.orchestrator.reduce_check(self_test=run.args.self_test)
    for result in results:
        verdict = "pass" if result.passed else "FAIL"
        print(f"{verdict} {result.name}: {result.detail}")
        if result.witness:
            print(f"  witness: {result.witness}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def cmd_thresholds(run: _Run) -> int:
    for report in run.orchestrator.thresholds(run.config):
        limit = "-" if report.threshold is None else f"{report.threshold:.10g}"
        print(f"{report.label:48s} Q={report.quantum_value:.10g} B={report.classical_bound:g} {report.kind}={limit}")
    return EXIT_OK


def cmd_probe(run: _Run) -> int:
    report = run.orchestrator.probe(run.args.samples, run.config.seed, run.config, name=run.args.name)
    print(report.model_dump_json(indent=2, exclude={"samples"}))
    return EXIT_OK if not report.counterexamples else EXIT_CHECK_FAILED


def cmd_serve(run: _Run) -> int:
    import uvicorn
    uvicorn.run("main:app", host=run.args.host, port=run.args.port, log_level="info")
    return EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "bound": cmd_bound,
    "tight": cmd_tight,
    "violate": cmd_violate,
    "ghz4-table": cmd_ghz4_table,
    "sweep": cmd_sweep,
    "reduce-check": cmd_reduce_check,
    "thresholds": cmd_thresholds,
    "probe": cmd_probe,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level or settings.LOG_LEVEL),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        run = _Run(args, argv)
        logger.info(f"{args.command}: seed={run.config.seed}")
        return COMMANDS[args.command](run)
    except BellError as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
