"""
Picard fixed-point time stepping on the Duhamel formula.

For dynamics of the form u_t = E u - i N(u), with E a diagonal (per-mode)
exponent, one step of length dt solves

    u(t) = exp(E t) u0 - i * integral_0^t exp(E (t - s)) N(u(s)) ds,   0 <= t <= dt

on M uniform quadrature nodes by repeated substitution. The integral is the
composite trapezoid over the nodes up to t. Successive update norms (H^p, sup
over nodes) give the contraction ratios reported for every step; a step with
any ratio >= 1, or one that runs out of iterations, is rejected.

The integrator works on any object exposing ``grid``, ``exponent`` and
``nonlinear(coeffs)``; ``DS2System`` and ``GeneralSystem`` both qualify.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..utils.display import print_status
from .ds2_model import DS2Params, DS2System, dispersion_phase, nonlinear_physical
from .errors import ConfigurationError, NoContractionError, NumericalError, RejectedStepError
from .spectral import (
    PeriodicGrid,
    SpectralField,
    algebra_check,
    dealias,
    forward_coeffs,
    inverse_coeffs,
    require_sobolev_exponent,
    sobolev_norm_coeffs,
)

BISECTION_ROUNDS = 20


class EvolutionSystem(Protocol):
    grid: PeriodicGrid
    exponent: np.ndarray

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class PicardConfig:
    """Settings of the Picard-Duhamel integrator.

    Args:
        quad_nodes: Trapezoid nodes per step, endpoints included (M >= 2)
        tol: Absolute H^p tolerance on the sup-over-nodes update
        theta: Contraction threshold used by the existence-time estimate
        max_iters: Iteration cap per step
        p: Sobolev exponent of the convergence norm
        retry_halvings: Times a rejected step may be retried as two half steps
    """

    quad_nodes: int = 8
    tol: float = 1e-10
    theta: float = 0.5
    max_iters: int = 50
    p: float = 1.5
    retry_halvings: int = 0

    def __post_init__(self):
        if int(self.quad_nodes) != self.quad_nodes or self.quad_nodes < 2:
            raise ConfigurationError(f"must be an integer >= 2, got {self.quad_nodes}", key="picard.quad_nodes")
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ConfigurationError(f"must be positive, got {self.tol}", key="picard.tol")
        if not 0.0 < self.theta < 1.0:
            raise ConfigurationError(f"must lie in (0, 1), got {self.theta}", key="picard.theta")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigurationError(f"must be a positive integer, got {self.max_iters}", key="picard.max_iters")
        if int(self.retry_halvings) != self.retry_halvings or self.retry_halvings < 0:
            raise ConfigurationError(
                f"must be a nonnegative integer, got {self.retry_halvings}", key="picard.retry_halvings"
            )
        if not np.isfinite(self.p):
            raise ConfigurationError(f"must be finite, got {self.p}", key="params.p")


@dataclass
class StepReport:
    """Outcome of one Picard step."""

    iters: int
    final_residual: float
    contraction_ratios: List[float]
    accepted: bool
    dt: float = 0.0
    history: Optional[List[Tuple[float, SpectralField]]] = field(default=None, repr=False)

    @property
    def max_ratio(self) -> float:
        return max(self.contraction_ratios) if self.contraction_ratios else 0.0


@dataclass
class Trajectory:
    """Result of a completed run.

    ``hp_norms`` holds the H^p norm at t=0 and after every accepted step, so
    ``sup_hp_norm`` is the norm of the solution in C([0, t]; H^p).
    """

    final: SpectralField
    t: float
    steps: int
    reports: List[StepReport]
    hp_norms: List[float]

    @property
    def sup_hp_norm(self) -> float:
        return max(self.hp_norms)

    @property
    def total_iterations(self) -> int:
        return sum(r.iters for r in self.reports)


@dataclass
class ExistenceReport:
    """Probe curve of the existence-time bisection."""

    T_star: float
    T_max: float
    theta: float
    probes: List[Tuple[float, float, bool]]
    algebra_ratio: Optional[float] = None

    def curve_csv(self) -> str:
        lines = ["T,max_ratio,contracts"]
        for T, ratio, passed in self.probes:
            lines.append(f"{T:.17g},{ratio:.17g},{int(passed)}")
        return "\n".join(lines) + "\n"


StepSink = Callable[[float, SpectralField, StepReport], None]


def _check_time(value: float, key: str) -> float:
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ConfigurationError(f"must be positive and finite, got {value}", key=key)
    return value


def _propagators(exponent: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.exp(exponent[np.newaxis] * times.reshape((-1,) + (1,) * exponent.ndim))


def duhamel_rhs(u0_hat: SpectralField, history: Sequence[Tuple[float, SpectralField]], t: float,
                exponent: Optional[np.ndarray] = None) -> SpectralField:
    """Evaluate the right-hand side of the Duhamel formula at time t.

    Args:
        u0_hat: Data at time 0
        history: Sorted (tau_j, N_j) pairs spanning [0, t], N_j the nonlinearity at tau_j
        t: Evaluation time
        exponent: Free-flow exponent per mode; defaults to the DS-II phase i(m^2 - k^2)

    Returns:
        exp(E t) u0 - i * trapezoid(exp(E (t - tau_j)) N_j)

    Raises:
        ConfigurationError: If the nodes are unsorted or do not span [0, t]
    """
    grid = u0_hat.grid
    if exponent is None:
        exponent = dispersion_phase(grid).exponent
    free = u0_hat.coeffs * np.exp(exponent * t)
    if not history:
        if t != 0.0:
            raise ConfigurationError("empty history only allowed at t = 0", key="history")
        return u0_hat.with_coeffs(free)
    taus = np.array([tau for tau, _ in history], dtype=float)
    scale = max(abs(t), 1.0) * 1e-12
    if np.any(np.diff(taus) < 0):
        raise ConfigurationError("history nodes must be sorted", key="history")
    if abs(taus[0]) > scale or abs(taus[-1] - t) > scale:
        raise ConfigurationError(f"history nodes must span [0, {t}], got [{taus[0]}, {taus[-1]}]", key="history")
    values = np.stack([n.coeffs for _, n in history])
    integrand = _propagators(exponent, t - taus) * values
    quad = trapezoid(integrand, x=taus, axis=0) if len(taus) > 1 else np.zeros(grid.shape)
    return u0_hat.with_coeffs(free - 1j * quad)


def _picard_iterate(system: EvolutionSystem, coeffs0: np.ndarray, dt: float, cfg: PicardConfig,
                    keep_history: bool = False) -> Tuple[np.ndarray, StepReport]:
    grid = system.grid
    taus = np.linspace(0.0, dt, cfg.quad_nodes)
    forward = _propagators(system.exponent, taus)
    backward = _propagators(system.exponent, -taus)
    base = forward * coeffs0[np.newaxis]
    current = base
    residuals: List[float] = []
    ratios: List[float] = []
    accepted = False

    for iteration in range(1, cfg.max_iters + 1):
        nonlinear = np.stack([system.nonlinear(current[j]) for j in range(len(taus))])
        if not np.all(np.isfinite(nonlinear)):
            raise NumericalError("non-finite nonlinear term", iteration=iteration)
        integral = cumulative_trapezoid(backward * nonlinear, x=taus, axis=0, initial=0)
        updated = base - 1j * forward * integral
        if not np.all(np.isfinite(updated)):
            raise NumericalError("non-finite Picard iterate", iteration=iteration)

        delta = float(np.max(sobolev_norm_coeffs(updated - current, grid, cfg.p)))
        if residuals:
            previous = residuals[-1]
            ratios.append(delta / previous if previous > 0.0 else 0.0)
        residuals.append(delta)
        current = updated

        if ratios and ratios[-1] >= 1.0:
            break
        if delta <= cfg.tol:
            accepted = True
            break

    report = StepReport(
        iters=len(residuals),
        final_residual=residuals[-1],
        contraction_ratios=ratios,
        accepted=accepted,
        dt=dt,
    )
    if keep_history:
        report.history = [(float(tau), SpectralField(grid, current[j])) for j, tau in enumerate(taus)]
    return current[-1], report


def picard_step(u_hat: SpectralField, dt: float, params: DS2Params, cfg: PicardConfig,
                keep_history: bool = False) -> Tuple[SpectralField, StepReport]:
    """Advance DS-II data by one Picard-Duhamel step.

    Args:
        u_hat: Data at the start of the step
        dt: Step length
        params: DS-II constants
        cfg: Integrator settings
        keep_history: Attach the converged node values to the report

    Returns:
        Tuple of (field at dt, step report); the report says whether the step was accepted

    Raises:
        NumericalError: If an iterate becomes non-finite
    """
    dt = _check_time(dt, "time.dt")
    require_sobolev_exponent(cfg.p, u_hat.grid.ndim)
    coeffs, report = _picard_iterate(DS2System(u_hat.grid, params), u_hat.coeffs, dt, cfg, keep_history)
    return u_hat.with_coeffs(coeffs), report


class _Rejected(Exception):
    def __init__(self, report: StepReport):
        self.report = report


def _advance(system: EvolutionSystem, coeffs: np.ndarray, h: float, cfg: PicardConfig,
             depth: int = 0) -> Tuple[np.ndarray, List[StepReport]]:
    updated, report = _picard_iterate(system, coeffs, h, cfg)
    if report.accepted:
        return updated, [report]
    if depth < cfg.retry_halvings:
        print_status(f"Picard step of length {h:.3e} rejected, retrying as two half steps", "warning")
        middle, first = _advance(system, coeffs, h / 2.0, cfg, depth + 1)
        final, second = _advance(system, middle, h / 2.0, cfg, depth + 1)
        return final, first + second
    raise _Rejected(report)


def step_times(t_end: float, dt: float) -> List[float]:
    """End times of the uniform steps covering (0, t_end], last step possibly partial."""
    count = max(1, int(np.ceil(t_end / dt - 1e-9)))
    return [k * dt for k in range(1, count)] + [t_end]


def evolve_system(system: EvolutionSystem, u0_hat: SpectralField, t_end: float, dt: float,
                  cfg: PicardConfig, sink: Optional[StepSink] = None) -> Trajectory:
    """Chain Picard steps of any evolution system from 0 to t_end."""
    t_end = _check_time(t_end, "time.t_end")
    dt = _check_time(dt, "time.dt")
    require_sobolev_exponent(cfg.p, u0_hat.grid.ndim)

    coeffs = u0_hat.coeffs
    t = 0.0
    reports: List[StepReport] = []
    hp_norms = [float(sobolev_norm_coeffs(coeffs, system.grid, cfg.p))]
    times = step_times(t_end, dt)
    for t_next in times:
        try:
            coeffs, step_reports = _advance(system, coeffs, t_next - t, cfg)
        except _Rejected as rejected:
            raise RejectedStepError(rejected.report, t, u0_hat.with_coeffs(coeffs)) from None
        t = t_next
        reports.extend(step_reports)
        field_now = u0_hat.with_coeffs(coeffs)
        hp_norms.append(float(sobolev_norm_coeffs(coeffs, system.grid, cfg.p)))
        if sink is not None:
            sink(t, field_now, step_reports[-1])
    return Trajectory(final=u0_hat.with_coeffs(coeffs), t=t, steps=len(times), reports=reports, hp_norms=hp_norms)


def evolve(u0_hat: SpectralField, t_end: float, dt: float, params: DS2Params, cfg: PicardConfig,
           sink: Optional[StepSink] = None) -> Trajectory:
    """Evolve DS-II data to t_end with uniform Picard steps.

    Raises:
        RejectedStepError: On the first step that does not contract (after any retries)
    """
    return evolve_system(DS2System(u0_hat.grid, params), u0_hat, t_end, dt, cfg, sink)


def split_step_reference(u0_hat: SpectralField, t_end: float, dt: float, params: DS2Params) -> SpectralField:
    """Strang-split reference integrator.

    Half step of free flow, one classical RK4 step of i u_t = N(u) on the physical
    samples (phi_x refreshed at every stage), half step of free flow.
    """
    t_end = _check_time(t_end, "time.t_end")
    dt = _check_time(dt, "time.dt")
    grid = u0_hat.grid
    phase = dispersion_phase(grid)

    def rate(v: np.ndarray) -> np.ndarray:
        return -1j * nonlinear_physical(v, grid, params)

    coeffs = u0_hat.coeffs
    t = 0.0
    for t_next in step_times(t_end, dt):
        h = t_next - t
        half = phase.propagator(h / 2.0)
        coeffs = coeffs * half
        if not params.is_linear:
            u = inverse_coeffs(coeffs, grid)
            k1 = rate(u)
            k2 = rate(u + 0.5 * h * k1)
            k3 = rate(u + 0.5 * h * k2)
            k4 = rate(u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            coeffs = forward_coeffs(u, grid)
            if params.dealias:
                coeffs = dealias(coeffs, grid)
        coeffs = coeffs * half
        if not np.all(np.isfinite(coeffs)):
            raise NumericalError(f"split-step reference became non-finite at t={t_next:.6g}")
        t = t_next
    return u0_hat.with_coeffs(coeffs)


def existence_time_estimate(u0_hat: SpectralField, params: DS2Params, cfg: PicardConfig,
                            T_max: float) -> Tuple[float, ExistenceReport]:
    """Estimate the local existence time from measured contraction ratios.

    T_max is probed first; if it does not contract, a fixed number of bisection
    rounds over (0, T_max] follows. A probe contracts when its single Picard step
    is accepted with every ratio <= theta.

    Returns:
        Tuple of (T_star, report with the probe curve)

    Raises:
        NoContractionError: If no probe down to T_max * 2**-20 contracts
    """
    return estimate_existence_time(DS2System(u0_hat.grid, params), u0_hat, cfg, T_max)


def estimate_existence_time(system: EvolutionSystem, u0_hat: SpectralField, cfg: PicardConfig,
                            T_max: float) -> Tuple[float, ExistenceReport]:
    """Existence-time bisection for any evolution system."""
    T_max = _check_time(T_max, "estimate.T_max")
    require_sobolev_exponent(cfg.p, u0_hat.grid.ndim)
    report = ExistenceReport(T_star=0.0, T_max=T_max, theta=cfg.theta, probes=[])
    report.algebra_ratio = algebra_check(u0_hat, u0_hat, cfg.p)[1]

    def contracts(T: float) -> bool:
        try:
            _, step = _picard_iterate(system, u0_hat.coeffs, T, cfg)
        except NumericalError:
            report.probes.append((T, float("inf"), False))
            return False
        passed = step.accepted and step.max_ratio <= cfg.theta
        report.probes.append((T, step.max_ratio, passed))
        return passed

    if contracts(T_max):
        report.T_star = T_max
        return T_max, report

    low, high = 0.0, T_max
    for _ in range(BISECTION_ROUNDS):
        middle = 0.5 * (low + high)
        if contracts(middle):
            low = middle
        else:
            high = middle
    if low == 0.0:
        raise NoContractionError(report)
    report.T_star = low
    return low, report
