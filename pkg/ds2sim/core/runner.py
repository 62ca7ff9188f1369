"""
Run drivers behind the command-line interface.

Each driver takes a validated RunConfig, performs one kind of job and writes
its outputs under the configured directory. Errors propagate as exceptions
from ``core.errors`` (or OSError); the CLI turns them into exit codes.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..utils.display import print_section, print_status, print_table, set_quiet
from ..utils.system import check_memory, default_worker_count
from .config import RunConfig, member_config
from .diagnostics import DiagnosticsWriter, display_summary, plot_history, save_run_info
from .ds2_model import DS2System
from .errors import ConfigurationError, DS2Error, NoContractionError, NumericalError, RejectedStepError
from .general_system import GeneralSystem
from .snapshot import emit_amplitude_image, write_snapshot
from .spectral import SpectralField
from .timestepper import ExistenceReport, StepReport, Trajectory, estimate_existence_time, evolve_system

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_REJECTED = 2
EXIT_IO = 3


def exit_code_for(error: BaseException) -> int:
    """Map a library or I/O error onto the CLI exit code.

    Raises:
        TypeError: error is neither a DS2Error nor an OSError
    """
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(error, (RejectedStepError, NoContractionError, NumericalError)):
        return EXIT_REJECTED
    if isinstance(error, (OSError, DS2Error)):
        return EXIT_IO
    raise TypeError(f"no exit code for {type(error).__name__}") from error


@dataclass
class RunSummary:
    """What a completed run produced."""

    output_dir: str
    trajectory: Trajectory
    diagnostics_path: str
    files: List[str]


def build_system(config: RunConfig):
    """Evolution system for the configured model."""
    if config.model == "ds2":
        return DS2System(config.grid, config.params)
    return GeneralSystem(config.grid, config.system)


class _OutputSink:
    """Step sink that streams diagnostics and writes snapshots/images on cadence."""

    def __init__(self, config: RunConfig, writer: DiagnosticsWriter):
        self.config = config
        self.writer = writer
        self.step = 0
        self.files: List[str] = []
        self.two_dimensional = config.grid.ndim == 2

    def write_outputs(self, name: str, t: float, u_hat: SpectralField) -> None:
        if not self.two_dimensional:
            return
        path = os.path.join(self.config.output_dir, f"{name}.ds2f")
        write_snapshot(u_hat, t, path)
        self.files.append(path)
        if self.config.images:
            image = os.path.join(self.config.output_dir, f"{name}.pgm")
            emit_amplitude_image(u_hat, image)
            self.files.append(image)

    def __call__(self, t: float, u_hat: SpectralField, report: StepReport) -> None:
        self.step += 1
        self.writer(t, u_hat, report)
        every = self.config.snapshot_every
        if every and self.step % every == 0:
            self.write_outputs(f"snapshot_{self.step:06d}", t, u_hat)


def run_simulation(config: RunConfig) -> RunSummary:
    """Evolve the configured initial condition and write all outputs.

    Raises:
        RejectedStepError: After writing the last good state as last_good.ds2f
    """
    os.makedirs(config.output_dir, exist_ok=True)
    check_memory(config.grid.size, config.picard.quad_nodes)
    system = build_system(config)
    u0 = config.initial.build(config.grid)
    diagnostics_path = os.path.join(config.output_dir, "diagnostics.csv")
    if config.grid.ndim != 2:
        print_status("Snapshots and images are two-dimensional only; skipping them for this grid", "info")

    with DiagnosticsWriter(diagnostics_path, config.model_params, config.p, config.leak_threshold) as writer:
        sink = _OutputSink(config, writer)
        try:
            trajectory = evolve_system(system, u0, config.t_end, config.dt, config.picard, sink)
        except RejectedStepError as error:
            sink.write_outputs("last_good", error.t_last_good, error.last_good)
            raise
        sink.write_outputs("final", trajectory.t, trajectory.final)

    files = [diagnostics_path] + sink.files
    if config.chart:
        chart = plot_history(writer.records, os.path.join(config.output_dir, "diagnostics.png"))
        if chart:
            files.append(chart)
    info = {
        "config": dict(sorted(config.entries.items())),
        "steps": trajectory.steps,
        "picard_iterations": trajectory.total_iterations,
        "max_contraction_ratio": writer.max_ratio,
        "sup_hp_norm": trajectory.sup_hp_norm,
        "t_final": trajectory.t,
    }
    files.append(save_run_info(os.path.join(config.output_dir, "run_info.json"), info))
    display_summary(writer.records, trajectory.steps, writer.iterations, writer.max_ratio)
    return RunSummary(config.output_dir, trajectory, diagnostics_path, files)


def run_estimate(config: RunConfig) -> Tuple[float, ExistenceReport]:
    """Existence-time estimate for the configured initial condition."""
    system = build_system(config)
    u0 = config.initial.build(config.grid)
    T_star, report = estimate_existence_time(system, u0, config.picard, config.T_max)
    print_section("Existence Time")
    print_table(
        ["T_max", "T_star", "theta", "probes", "algebra ratio"],
        [[f"{config.T_max:.6g}", f"{T_star:.6g}", config.picard.theta, len(report.probes),
          f"{report.algebra_ratio:.4g}" if report.algebra_ratio is not None else "-"]],
    )
    return T_star, report


def _run_member(config: RunConfig, overrides: dict, output_dir: str, quiet: bool) -> Tuple[bool, Optional[str], int]:
    """Run one sweep member; returns (success, error message, exit code)."""
    previous = set_quiet(quiet)
    try:
        run_simulation(member_config(config, overrides, output_dir))
        return True, None, EXIT_OK
    except (DS2Error, OSError) as e:
        return False, str(e), exit_code_for(e)
    finally:
        set_quiet(previous)


def run_sweep(config: RunConfig, workers: Optional[int] = None) -> List[Tuple[str, bool, Optional[str], int]]:
    """Run every member of the sweep, each in its own output directory.

    Members are independent trajectories; with more than one worker they run
    in separate processes. Outputs do not depend on the worker count.

    Returns:
        One (directory, success, error message, exit code) tuple per member
    """
    members = config.sweep_members()
    workers = workers or config.workers or default_worker_count()
    workers = max(1, min(workers, len(members)))
    os.makedirs(config.output_dir, exist_ok=True)
    check_memory(config.grid.size, config.picard.quad_nodes, workers)
    jobs = []
    for label, overrides in members:
        directory = os.path.join(config.output_dir, label)
        jobs.append((directory, overrides))
        with open(os.path.join(config.output_dir, f"{label}.txt"), "w", encoding="utf-8") as f:
            f.writelines(f"{k} = {v}\n" for k, v in sorted(overrides.items()))

    if workers == 1:
        outcomes = [_run_member(config, overrides, directory, True) for directory, overrides in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_member, config, overrides, directory, True) for directory, overrides in jobs]
            outcomes = [future.result() for future in futures]

    results = [(directory, ok, message, code) for (directory, _), (ok, message, code) in zip(jobs, outcomes)]
    print_section("Sweep Results")
    print_table(
        ["directory", "status", "message"],
        [[d, "ok" if ok else "failed", message or ""] for d, ok, message, _ in results],
    )
    return results
