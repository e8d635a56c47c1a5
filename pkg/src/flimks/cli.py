"""Batch front end: certify, run and sweep."""
import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

from .config import AppConfig, ConfigError, load_config
from .feasibility import select_params
from .operators import certify_subsolution
from .problem import make_setup
from .solver import InitSpec, SolverConfig, build_initial_state, make_grid, run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_CERT_FAIL = 3

PHASE_HEADER = ["n", "R", "chi", "m", "feasible", "outcome", "t_detect", "T_ext"]


def _configure_logging(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    log_file = out_dir / "flimks.log"
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(),
        ],
        force=True,
    )
    logger.info(f"Logging to {log_file}")


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.10g}"


@dataclass
class SweepSpec:
    n: int
    R: float
    chi_values: List[float]
    m_values: List[float]
    solver: SolverConfig
    init: InitSpec
    out_dir: Path

    def __post_init__(self):
        if not self.chi_values or not self.m_values:
            raise ValueError("sweep needs non-empty chi and m lists")
        if any(value <= 0 for value in list(self.chi_values) + list(self.m_values)):
            raise ValueError("sweep values for chi and m must be positive")
        if self.init.mode == "threshold":
            raise ValueError("sweeps compare one data family across cases; threshold data exists only "
                             "for feasible cases, choose init.mode = bump, uniform or profile")

    def cases(self):
        return [(chi, m) for chi in sorted(self.chi_values) for m in sorted(self.m_values)]

    @classmethod
    def from_config(cls, config: AppConfig, out_dir: Path) -> "SweepSpec":
        if not config.has("problem.n"):
            raise ConfigError("missing required key problem.n")
        init = config.init if config.has("init.mode") else replace(config.init, mode="bump")
        return cls(n=config.values["problem.n"], R=config.values.get("problem.R", 1.0),
                   chi_values=config.sweep_chi, m_values=config.sweep_m,
                   solver=config.solver, init=init, out_dir=out_dir)


def _sweep_case(job) -> List[str]:
    n, R, chi, m, solver, init = job
    setup = make_setup(n, R, chi, m)
    report = select_params(setup)
    state, run_setup = build_initial_state(init, setup, make_grid(setup, solver))
    result = run(state, run_setup, solver)
    T_ext = report.params.T_ext if report.feasible else None
    return [str(n), _fmt(R), _fmt(chi), _fmt(m), "true" if report.feasible else "false",
            result.outcome.value, _fmt(result.t_detect), _fmt(T_ext)]


def cmd_certify(config_path, out_dir) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        config = load_config(config_path)
        setup = config.setup()
    except ValueError as e:
        logger.error(f"Configuration rejected: {e}")
        return EXIT_USAGE

    report = select_params(setup)
    report.to_csv(out_dir / "constraints.csv")
    if not report.feasible:
        (out_dir / "feasibility.json").write_text(json.dumps(report.to_dict(), indent=2))
        logger.error(f"Infeasible case: {report.reason}")
        return EXIT_INFEASIBLE

    cert = certify_subsolution(report.params, setup, config.grid)
    (out_dir / "cert_report.json").write_text(cert.to_json())
    return EXIT_OK if cert.passed else EXIT_CERT_FAIL


def cmd_run(config_path, out_dir) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        config = load_config(config_path)
        setup = config.setup()
    except ValueError as e:
        logger.error(f"Configuration rejected: {e}")
        return EXIT_USAGE

    params = None
    if config.init.mode == "threshold":
        report = select_params(setup)
        report.to_csv(out_dir / "constraints.csv")
        if not report.feasible:
            logger.error(f"No threshold-dominating data: {report.reason}")
            return EXIT_INFEASIBLE
        params = report.params

    try:
        state, run_setup = build_initial_state(config.init, setup, make_grid(setup, config.solver), params)
    except (ValueError, OSError) as e:
        logger.error(f"Initial data rejected: {e}")
        return EXIT_USAGE

    result = run(state, run_setup, config.solver, params, base_setup=setup)
    (out_dir / "run_report.json").write_text(result.to_json())
    result.write_trace_csv(out_dir / "trace.csv")
    return EXIT_OK


def cmd_sweep(spec: SweepSpec, workers: int = 1) -> int:
    jobs = [(spec.n, spec.R, chi, m, spec.solver, spec.init) for chi, m in spec.cases()]
    logger.info(f"sweeping {len(jobs)} cases with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_sweep_case, jobs))
    else:
        rows = [_sweep_case(job) for job in jobs]

    table = spec.out_dir / "phase_table.csv"
    try:
        spec.out_dir.mkdir(parents=True, exist_ok=True)
        with table.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(PHASE_HEADER)
            writer.writerows(rows)
    except OSError as e:
        logger.error(f"Cannot write sweep output: {e}")
        return EXIT_USAGE
    logger.info(f"phase table written to {table}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flimks", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("certify", "select parameters and certify the subsolution"),
                            ("run", "integrate one case"),
                            ("sweep", "phase table over chi and m")):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="key = value configuration file")
        sub.add_argument("--out", default="out", help="output directory")
        sub.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    out_dir = Path(args.out)
    try:
        _configure_logging(out_dir)
    except OSError as e:
        print(f"cannot create output directory {out_dir}: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "certify":
            return cmd_certify(args.config, out_dir)
        if args.command == "run":
            return cmd_run(args.config, out_dir)
        if args.workers < 1:
            raise ValueError(f"--workers must be positive, got {args.workers}")
        spec = SweepSpec.from_config(load_config(args.config), out_dir)
        return cmd_sweep(spec, args.workers)
    except ValueError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
