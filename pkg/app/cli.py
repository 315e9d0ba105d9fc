"""Command-line front end.

    python app.py melnikov --config run.json --out results/
    python app.py displacement | fit | search | simulate | report ...

A run configuration is a JSON object with the system definition under
``system`` (inline, or a path relative to the config file) plus optional
command blocks. A bare system definition file is accepted as a config.
Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import copy
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from app.components.report import ReportGenerator, write_report
from app.utils.analysis import (
    conjecture_report,
    fit_expansion,
    radius_grid,
    search_harness_roots,
    search_limit_cycles,
    sweep_melnikov,
)
from app.utils.errors import ConfigError, InvalidInputError, NumericalFailure
from app.utils.export import (
    displacement_frame,
    events_frame,
    fit_frame,
    melnikov_frame,
    search_frame,
    trajectory_frame,
    write_csv,
    write_json,
)
from app.utils.flow import IntegrationOptions, displacement_sweep, simulate
from app.utils.model import GeneralHarnessSystem
from app.utils.settings import Settings
from app.utils.system_loader import DEFAULT_SYSTEM_FILE, SystemLoader, system_from_definition

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

INTEGRATOR_FIELDS = tuple(f.name for f in fields(IntegrationOptions))

DEFAULT_R_GRID = {"min": 0.25, "max": 4.0, "count": 16, "spacing": "linear"}
DEFAULT_BLOCKS = {
    "displacement": {"epsilons": [0.01]},
    "fit": {"r": 1.5},
    "search": {"epsilon": 0.01, "r_min": 0.25, "r_max": 4.0, "count": 32},
    "simulate": {"x0": 0.0, "y0": 1.5, "epsilon": 0.01, "t_max": 2 * math.pi,
                 "output_step": None, "time_direction": 1},
    "report": {"r_min": 0.25, "r_max": 4.0, "count": 16, "epsilons": [0.005, 0.01, 0.02], "trials": 0},
}


@dataclass
class RunConfig:
    system: dict
    output_dir: str = "results"
    r_grid: dict = field(default_factory=lambda: dict(DEFAULT_R_GRID))
    tol: Optional[float] = None
    seed: Optional[int] = None
    jobs: Optional[int] = None
    integrator: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_BLOCKS))
    source: Optional[str] = None

    @classmethod
    def load(cls, path=None):
        """Read a run configuration; with no path the bundled example system is used."""
        if path is None:
            return cls(system=SystemLoader(DEFAULT_SYSTEM_FILE).definition, source=DEFAULT_SYSTEM_FILE)
        data = SystemLoader(path).definition
        if not isinstance(data, dict):
            raise ConfigError("run configuration must be an object", field="config")

        if "system" in data:
            system = data["system"]
            if isinstance(system, str):
                system_path = system if os.path.isabs(system) else os.path.join(os.path.dirname(path), system)
                system = SystemLoader(system_path).definition
        else:
            system = data

        config = cls(system=system, source=path)
        if "output_dir" in data:
            config.output_dir = data["output_dir"]
        config.r_grid.update(data.get("r_grid", {}))
        config.tol = data.get("tol")
        config.seed = data.get("seed")
        config.jobs = data.get("jobs")
        config.integrator = dict(data.get("integrator", {}))
        for name in DEFAULT_BLOCKS:
            block = data.get(name, {})
            if not isinstance(block, dict):
                raise ConfigError("must be an object", field=name)
            config.blocks[name].update(block)
        if "epsilons" in data:
            config.blocks["displacement"]["epsilons"] = data["epsilons"]
        config.validate()
        return config

    def apply_flags(self, args):
        if args.out is not None:
            self.output_dir = args.out
        if args.tol is not None:
            self.tol = args.tol
        if args.seed is not None:
            self.seed = args.seed
        if args.jobs is not None:
            self.jobs = args.jobs
        self.validate()
        return self

    def validate(self):
        grid = self.r_grid
        try:
            count = int(grid["count"])
            lower, upper = float(grid["min"]), float(grid["max"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"needs numeric min, max and count ({e})", field="r_grid")
        single = count == 1 and 0.0 < lower <= upper
        if count < 1 or not (single or 0.0 < lower < upper):
            raise ConfigError(f"empty or invalid grid min={lower}, max={upper}, count={count}", field="r_grid")
        if grid.get("spacing", "linear") not in ("linear", "log"):
            raise ConfigError(f"unknown spacing {grid.get('spacing')!r}", field="r_grid.spacing")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError(f"must be positive, got {self.tol!r}", field="tol")
        if self.jobs is not None and int(self.jobs) < 1:
            raise ConfigError(f"must be at least 1, got {self.jobs!r}", field="jobs")
        for name, value in self.integrator.items():
            if name not in INTEGRATOR_FIELDS:
                raise ConfigError(f"unknown option; expected one of {', '.join(INTEGRATOR_FIELDS)}",
                                  field=f"integrator.{name}")
            if not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"must be positive, got {value!r}", field=f"integrator.{name}")

    def radii(self):
        grid = self.r_grid
        if int(grid["count"]) == 1:
            return [float(grid["min"])]
        return list(radius_grid(float(grid["min"]), float(grid["max"]), int(grid["count"]),
                                grid.get("spacing", "linear")))

    def prepare_output(self):
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create {self.output_dir}: {e}", field="output_dir")
        if not os.access(self.output_dir, os.W_OK):
            raise ConfigError(f"{self.output_dir} is not writable", field="output_dir")
        return self.output_dir


class Context:
    """Settings, run configuration and the built system for one command."""

    def __init__(self, config, settings):
        self.config = config
        self.settings = settings
        self.system = system_from_definition(config.system)
        self.tol = float(config.tol) if config.tol is not None else settings.quad_tol
        self.jobs = int(config.jobs) if config.jobs is not None else settings.jobs
        self.quad_limit = int(settings.get("quadrature", "limit"))
        self.epsilon_step = float(settings.get("finite_difference", "epsilon_step"))
        options = IntegrationOptions.from_settings(settings)
        self.options = replace(options, **{k: float(v) for k, v in config.integrator.items()})
        self.root_options = {
            "xtol": float(settings.get("roots", "xtol")),
            "derivative_step": float(settings.get("finite_difference", "root_derivative_step")),
            "derivative_floor": float(settings.get("roots", "derivative_floor")),
            "even_root_floor": float(settings.get("roots", "even_root_floor")),
        }

    @property
    def is_harness(self):
        return isinstance(self.system, GeneralHarnessSystem)

    def block(self, name):
        return self.config.blocks[name]

    def path(self, filename):
        return os.path.join(self.config.output_dir, filename)

    def require_piecewise(self, command):
        if self.is_harness:
            raise ConfigError(f"'{command}' needs a piecewise system, got {self.system.label}", field="kind")


def _write(result):
    success, message = result
    if not success:
        raise ConfigError(message, field="output_dir")
    logger.debug(message)


def cmd_melnikov(ctx):
    ctx.require_piecewise("melnikov")
    curve = sweep_melnikov(
        ctx.system, ctx.config.radii(), ctx.tol, ctx.jobs,
        grazing_factor=float(ctx.settings.get("grazing", "tol_factor")),
        nudge_multiple=int(ctx.settings.get("grazing", "nudge_multiple")),
        limit=ctx.quad_limit,
    )
    _write(write_csv(melnikov_frame(curve), ctx.path("melnikov.csv")))
    m1 = [abs(v) for v in curve.column("m1_quad") + curve.column("m1_closed") if math.isfinite(v)]
    m2 = [v for v in curve.column("m2_quad") if math.isfinite(v)]
    print(f"melnikov: {len(curve.samples)} radii, max |M1| = {max(m1, default=math.nan):.3e}, "
          f"min M2 = {min(m2, default=math.nan):.9g}, order = {curve.order}")
    print(f"wrote {ctx.path('melnikov.csv')}")
    failed = [s for s in curve.samples if s.note]
    if failed:
        raise NumericalFailure(f"{len(failed)} sample(s) failed, first at r={failed[0].r:g}: {failed[0].note}")
    return EXIT_OK


def cmd_displacement(ctx):
    ctx.require_piecewise("displacement")
    epsilons = ctx.block("displacement")["epsilons"]
    if not epsilons:
        raise ConfigError("at least one value is required", field="epsilons")
    records = displacement_sweep(ctx.system, ctx.config.radii(), epsilons, ctx.options, ctx.jobs)
    _write(write_csv(displacement_frame(records), ctx.path("displacement.csv")))
    print(f"displacement: {len(records)} samples, min d = {min(rec.d for rec in records):.9g}, "
          f"max d = {max(rec.d for rec in records):.9g}")
    print(f"wrote {ctx.path('displacement.csv')}")
    return EXIT_OK


def cmd_fit(ctx):
    ctx.require_piecewise("fit")
    block = ctx.block("fit")
    fit = fit_expansion(
        ctx.system,
        float(block["r"]),
        block.get("epsilons", ctx.settings.get("fit", "epsilons")),
        ctx.options,
        terms=int(block.get("terms", ctx.settings.get("fit", "terms"))),
        max_epsilon=float(block.get("max_epsilon", ctx.settings.get("fit", "max_epsilon"))),
        jobs=ctx.jobs,
    )
    _write(write_csv(fit_frame(fit), ctx.path("fit.csv")))
    _write(write_json(fit.to_dict(), ctx.path("fit.json")))
    print(f"fit at r={fit.r:g}: c1 = {fit.c1:.3e}, c2 = {fit.c2:.9g} +/- {fit.c2_uncertainty:.2e} "
          f"(M2 = {fit.target_m2:.9g}, relative error {fit.c2_relative_error:.2e})")
    if fit.c3 is not None:
        print(f"measured eps^3 coefficient: {fit.c3:.6g}")
    return EXIT_OK


def cmd_search(ctx):
    block = ctx.block("search")
    if ctx.is_harness:
        roots = search_harness_roots(ctx.system, float(block["r_min"]), float(block["r_max"]),
                                     int(block.get("count", 64)), ctx.tol, ctx.jobs, ctx.quad_limit,
                                     **ctx.root_options)
    else:
        roots = search_limit_cycles(ctx.system, float(block["epsilon"]), float(block["r_min"]),
                                    float(block["r_max"]), int(block["count"]), ctx.options, ctx.jobs,
                                    **ctx.root_options)
    _write(write_csv(search_frame(roots), ctx.path("search.csv")))
    _write(write_json(roots.to_dict(), ctx.path("roots.json")))
    found = ", ".join(f"{root.location:.9g} ({root.multiplicity})" for root in roots.roots) or "none"
    print(f"search {roots.function_label} on [{roots.interval[0]:g}, {roots.interval[1]:g}]: roots {found}")
    print(f"predicted limit cycles: {roots.predicted_cycles}")
    return EXIT_OK


def cmd_simulate(ctx):
    ctx.require_piecewise("simulate")
    block = ctx.block("simulate")
    trajectory = simulate(
        ctx.system,
        (float(block["x0"]), float(block["y0"])),
        float(block["epsilon"]),
        float(block["t_max"]),
        ctx.options,
        output_step=block.get("output_step"),
        time_direction=int(block.get("time_direction", 1)),
    )
    _write(write_csv(trajectory_frame(trajectory), ctx.path("trajectory.csv")))
    _write(write_csv(events_frame(trajectory.events), ctx.path("events.csv")))
    x, y = trajectory.final_state
    print(f"simulate: {len(trajectory.t)} points, {len(trajectory.crossings())} crossings, "
          f"final state ({x:.9g}, {y:.9g})")
    return EXIT_OK


def cmd_report(ctx):
    block = ctx.block("report")
    fit_block = ctx.block("fit")
    report = conjecture_report(
        ctx.system,
        r_range=(float(block["r_min"]), float(block["r_max"])),
        epsilons=block.get("epsilons", []),
        count=int(block["count"]),
        tol=ctx.tol,
        options=ctx.options,
        fit_epsilons=fit_block.get("epsilons", ctx.settings.get("fit", "epsilons")),
        fit_terms=int(fit_block.get("terms", ctx.settings.get("fit", "terms"))),
        seed=ctx.config.seed,
        trials=int(block.get("trials", 0)),
        jobs=ctx.jobs,
        root_options=ctx.root_options,
        limit=ctx.quad_limit,
        epsilon_step=ctx.epsilon_step,
    )
    _write(write_report(report, ctx.config.output_dir))
    if report.melnikov is not None:
        _write(write_csv(melnikov_frame(report.melnikov), ctx.path("report_melnikov.csv")))
    if report.displacements:
        _write(write_csv(displacement_frame(report.displacements), ctx.path("report_displacement.csv")))
    ReportGenerator(ctx.config.output_dir).generate_report_pdf(report)
    print(f"verdict: {report.verdict}")
    print(f"predicted limit cycles: {report.predicted_cycles}")
    if report.failures:
        print(f"{len(report.failures)} sub-computation(s) failed; see report.txt")
    return EXIT_OK


COMMANDS = {
    "melnikov": (cmd_melnikov, "M1 and M2 over a radius grid (melnikov.csv)"),
    "displacement": (cmd_displacement, "measured displacement over r and eps (displacement.csv)"),
    "fit": (cmd_fit, "fit d(h, eps) to the eps expansion (fit.csv, fit.json)"),
    "search": (cmd_search, "root search for limit cycles (search.csv, roots.json)"),
    "simulate": (cmd_simulate, "one trajectory with zone events (trajectory.csv, events.csv)"),
    "report": (cmd_report, "limit-cycle evidence report (report.json, report.txt, report.pdf)"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration or system definition (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker threads for grid work")
    common.add_argument("--tol", type=float, help="absolute quadrature tolerance")
    common.add_argument("--seed", type=int, help="seed for randomized checks")
    common.add_argument("--settings", help="numerics settings file")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    parser = argparse.ArgumentParser(prog="app.py", description="Melnikov and return-map analysis of piecewise Duffing systems")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def _configure_logging(level):
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(level)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = Settings(args.settings) if args.settings else Settings()
    _configure_logging(logging.DEBUG if args.verbose else settings.log_level)

    handler, _ = COMMANDS[args.command]
    try:
        config = RunConfig.load(args.config).apply_flags(args)
        config.prepare_output()
        ctx = Context(config, settings)
        return handler(ctx)
    except InvalidInputError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
