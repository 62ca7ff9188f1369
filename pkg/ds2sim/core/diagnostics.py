"""
Run diagnostics for DS-II and general simulations.

This module tracks the conserved mass, the H^p norm, peak amplitude, the
boundary leak that monitors the periodic truncation, and the size of the
mean-flow gradient. Records stream to a CSV file during a run; at the end the
history can be charted and summarized.
"""
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np

try:
    import matplotlib
    matplotlib.use('Agg')  # Use non-interactive backend
    import matplotlib.pyplot as plt
    MATPLOTLIB_AVAILABLE = True
except ImportError:
    MATPLOTLIB_AVAILABLE = False

from ..utils.display import print_section, print_status, print_table
from ..utils.system import get_system_info
from .ds2_model import DS2Params, phi_x_coeffs
from .general_system import GeneralSystemSpec, grad_phi_coeffs
from .spectral import SpectralField, forward_coeffs, inverse_coeffs, inverse_transform, l2_norm, sobolev_norm

CSV_COLUMNS = ("t", "mass", "hp_norm", "linf", "boundary_leak", "phi_x_linf")

ModelParams = Union[DS2Params, GeneralSystemSpec, None]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Diagnostics of one field at time t."""

    t: float
    mass: float
    hp_norm: float
    linf: float
    boundary_leak: float
    phi_x_linf: float

    def csv_row(self) -> str:
        return ",".join(f"{getattr(self, name):.17g}" for name in CSV_COLUMNS)


def boundary_max(values: np.ndarray) -> float:
    """Largest modulus on the outermost layer of grid points."""
    magnitude = np.abs(values)
    edges = []
    for axis in range(magnitude.ndim):
        edges.append(np.max(np.take(magnitude, 0, axis=axis)))
        edges.append(np.max(np.take(magnitude, -1, axis=axis)))
    return float(max(edges))


def _phi_x_linf(u_hat: SpectralField, params: ModelParams) -> float:
    grid = u_hat.grid
    if isinstance(params, DS2Params):
        phi_x = phi_x_coeffs(u_hat.coeffs, grid, params.mu)
    elif isinstance(params, GeneralSystemSpec) and params.has_constraint:
        u = inverse_coeffs(u_hat.coeffs, grid)
        uc = np.conj(u)
        forcing = [forward_coeffs(f.evaluate(u, uc), grid) for f in params.f_bar]
        phi_x = grad_phi_coeffs(forcing, params, grid)[0]
    else:
        return 0.0
    return float(np.max(np.abs(inverse_coeffs(phi_x, grid))))


def compute_diagnostics(u_hat: SpectralField, params: ModelParams, p: float, t: float = 0.0) -> DiagnosticsRecord:
    """Diagnostics of a field; the mass is evaluated in Fourier space via Parseval.

    Args:
        u_hat: Field to inspect
        params: DS2Params, GeneralSystemSpec, or None when there is no mean flow
        p: Sobolev exponent of the reported norm
        t: Time stamp of the record

    Returns:
        DiagnosticsRecord for the field
    """
    values = inverse_transform(u_hat)
    return DiagnosticsRecord(
        t=float(t),
        mass=l2_norm(u_hat) ** 2,
        hp_norm=sobolev_norm(u_hat, p),
        linf=float(np.max(np.abs(values))),
        boundary_leak=boundary_max(values),
        phi_x_linf=_phi_x_linf(u_hat, params),
    )


class DiagnosticsWriter:
    """Step sink that streams diagnostics to CSV, one row per accepted step."""

    def __init__(self, path: str, params: ModelParams, p: float, leak_threshold: float = 1e-8):
        """Open the CSV file and write the header.

        Args:
            path: CSV file to create
            params: Model parameters used for the mean-flow column
            p: Sobolev exponent of the hp_norm column
            leak_threshold: Relative boundary-leak level that triggers a warning
        """
        self.path = path
        self.params = params
        self.p = p
        self.leak_threshold = leak_threshold
        self.records: List[DiagnosticsRecord] = []
        self.iterations: List[int] = []
        self.max_ratio = 0.0
        self.leak_warned = False
        self._handle = open(path, "w", encoding="utf-8", newline="\n")
        self._handle.write(",".join(CSV_COLUMNS) + "\n")

    def __call__(self, t: float, u_hat: SpectralField, report: Any = None) -> DiagnosticsRecord:
        if self.records and not t > self.records[-1].t:
            raise ValueError(f"diagnostics time {t} does not increase past {self.records[-1].t}")
        record = compute_diagnostics(u_hat, self.params, self.p, t)
        self.records.append(record)
        if report is not None:
            self.iterations.append(report.iters)
            self.max_ratio = max(self.max_ratio, report.max_ratio)
        self._handle.write(record.csv_row() + "\n")
        self._handle.flush()
        if not self.leak_warned and record.boundary_leak > self.leak_threshold * record.linf:
            self.leak_warned = True
            print_status(
                f"boundary leak {record.boundary_leak:.3e} exceeds {self.leak_threshold:g} x linf at t={t:.6g}; "
                "the periodic box may be too small",
                "warning",
            )
        return record

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "DiagnosticsWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_diagnostics_csv(path: str) -> List[DiagnosticsRecord]:
    """Load a diagnostics CSV written by DiagnosticsWriter."""
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != ",".join(CSV_COLUMNS):
            raise ValueError(f"unexpected diagnostics header {header!r}")
        records = []
        for line in handle:
            if line.strip():
                records.append(DiagnosticsRecord(*(float(v) for v in line.strip().split(","))))
    return records


def plot_history(records: List[DiagnosticsRecord], path: str) -> Optional[str]:
    """Chart mass and H^p norm against time.

    Returns:
        Path of the chart, or None when matplotlib is unavailable or there is no data
    """
    if not MATPLOTLIB_AVAILABLE or not records:
        return None
    times = [r.t for r in records]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    mass0 = records[0].mass
    drift = [(r.mass - mass0) / mass0 if mass0 else 0.0 for r in records]
    ax1.plot(times, drift, color='#4a7abc')
    ax1.set_ylabel('relative mass drift')
    ax1.grid(linestyle='--', alpha=0.7)
    ax2.plot(times, [r.hp_norm for r in records], color='#bc4a4a')
    ax2.set_ylabel('H^p norm')
    ax2.set_xlabel('t')
    ax2.grid(linestyle='--', alpha=0.7)
    fig.tight_layout()
    fig.savefig(path, bbox_inches='tight', metadata={"Software": None})
    plt.close(fig)
    return path


def save_run_info(path: str, info: Dict[str, Any]) -> str:
    """Write run metadata as JSON, with platform details added."""
    payload = dict(info)
    payload["system"] = get_system_info()
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
    return path


def display_summary(records: List[DiagnosticsRecord], steps: int, iterations: List[int], max_ratio: float) -> None:
    """Print the end-of-run table."""
    if not records:
        print_status("No accepted steps to summarize.", "info")
        return
    first, last = records[0], records[-1]
    print_section("Run Summary")
    rows = [[name, f"{getattr(first, name):.6e}", f"{getattr(last, name):.6e}"] for name in CSV_COLUMNS]
    print_table(["quantity", "first step", "final"], rows)
    mean_iters = sum(iterations) / len(iterations) if iterations else 0.0
    print_table(
        ["steps", "mean Picard iterations", "max contraction ratio"],
        [[steps, f"{mean_iters:.2f}", f"{max_ratio:.3e}"]],
    )

