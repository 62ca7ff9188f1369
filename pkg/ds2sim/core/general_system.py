"""
General dispersive systems with a nonlocal constraint.

    i u_t = omega(-i grad) u + g(u, u*) + h(u, u*) . grad(phi)
    P phi = div f(u, u*),   grad(phi) -> 0

omega is a real polynomial in the wavenumbers (the dispersion relation, so the
free flow is exp(-i omega(k) t)), P a constant-coefficient second-order
operator with symbol -sum a_ij k_i k_j + i sum b_i k_i + c, and g, f_j, h_j
truncated power series in (u, u*) without constant term. DS-II is the case
n = 2, omega = k^2 - m^2, P = Laplacian, g = gamma u^2 u*, f = (mu |u|^2, 0),
h = (lambda u, 0); see ``ds2_system_spec``.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from .ds2_model import DS2Params
from .errors import ConfigurationError
from .spectral import (
    PeriodicGrid,
    SpectralField,
    dealias,
    forward_coeffs,
    inverse_coeffs,
    require_sobolev_exponent,
)
from .timestepper import (
    ExistenceReport,
    PicardConfig,
    StepSink,
    Trajectory,
    estimate_existence_time,
    evolve_system,
)

DEFAULT_MAX_DEGREE = 5
ELLIPTICITY_TOL = 1e-12


@dataclass(frozen=True)
class DispersionPolynomial:
    """Real polynomial sum c * k_1^e_1 ... k_n^e_n, stored as (exponents, c) terms."""

    terms: Tuple[Tuple[Tuple[int, ...], float], ...] = ()

    def __post_init__(self):
        normalized = []
        for exponents, coefficient in self.terms:
            exponents = tuple(int(e) for e in exponents)
            if any(e < 0 for e in exponents):
                raise ConfigurationError(f"negative exponent in {exponents}", key="omega.term")
            coefficient = complex(coefficient)
            if coefficient.imag != 0.0:
                raise ConfigurationError(
                    f"dispersion must be real, got coefficient {coefficient}",
                    key="omega.term." + ".".join(str(e) for e in exponents),
                )
            normalized.append((exponents, coefficient.real))
        object.__setattr__(self, "terms", tuple(normalized))

    def evaluate(self, wavevectors: Sequence[np.ndarray]) -> np.ndarray:
        result = np.zeros(np.shape(wavevectors[0]))
        for exponents, coefficient in self.terms:
            if len(exponents) != len(wavevectors):
                raise ConfigurationError(
                    f"term {exponents} has {len(exponents)} exponents for {len(wavevectors)} dimensions",
                    key="omega.term",
                )
            monomial = np.ones(np.shape(wavevectors[0]))
            for k, e in zip(wavevectors, exponents):
                if e:
                    monomial = monomial * k ** e
            result = result + coefficient * monomial
        return result


@dataclass(frozen=True)
class PowerSeries:
    """Truncated series sum c_ab u^a (u*)^b, stored as ((a, b), c) terms."""

    terms: Tuple[Tuple[Tuple[int, int], complex], ...] = ()

    def __post_init__(self):
        normalized = []
        for (a, b), coefficient in self.terms:
            a, b = int(a), int(b)
            if a < 0 or b < 0:
                raise ConfigurationError(f"negative power ({a}, {b})", key="term")
            normalized.append(((a, b), complex(coefficient)))
        object.__setattr__(self, "terms", tuple(normalized))

    @property
    def degree(self) -> int:
        return max((a + b for (a, b), c in self.terms if c != 0), default=0)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.terms)

    @property
    def constant_term(self) -> complex:
        return sum((c for (a, b), c in self.terms if a == 0 and b == 0), 0j)

    def evaluate(self, u: np.ndarray, uc: np.ndarray) -> np.ndarray:
        result = np.zeros(np.shape(u), dtype=np.complex128)
        for (a, b), coefficient in self.terms:
            if coefficient == 0:
                continue
            result = result + coefficient * u ** a * uc ** b
        return result


def series_eval(series: PowerSeries, u_values: np.ndarray, conj_values: np.ndarray) -> np.ndarray:
    """Evaluate a power series pointwise on (u, u*) samples."""
    if np.shape(u_values) != np.shape(conj_values):
        raise ConfigurationError(
            f"u and u* arrays differ in shape: {np.shape(u_values)} vs {np.shape(conj_values)}", key="series"
        )
    return series.evaluate(np.asarray(u_values), np.asarray(conj_values))


def derivative_symbol(grid: PeriodicGrid, axis: int) -> np.ndarray:
    """Symbol i k_axis of the first derivative along an axis."""
    return 1j * grid.wavevectors[axis]


def second_order_symbol(a: Sequence[Sequence[float]], b: Sequence[float], c: complex,
                        grid: PeriodicGrid) -> np.ndarray:
    """Symbol -sum a_ij k_i k_j + i sum b_i k_i + c of a constant-coefficient operator."""
    k = grid.wavevectors
    symbol = np.full(grid.shape, complex(c))
    for i in range(grid.ndim):
        symbol = symbol + 1j * b[i] * k[i]
        for j in range(grid.ndim):
            if a[i][j]:
                symbol = symbol - a[i][j] * k[i] * k[j]
    return symbol


@dataclass(frozen=True)
class GeneralSystemSpec:
    """Problem description of a general dispersive system.

    Args:
        n: Spatial dimension (1, 2 or 3)
        omega: Dispersion relation
        a: Second-order coefficients of P, n x n
        b: First-order coefficients of P, length n
        c: Zeroth-order coefficient of P
        g: Local nonlinearity
        f_bar: Constraint forcing, one series per axis
        h_bar: Coupling to grad(phi), one series per axis
        p: Sobolev exponent, p > n/2
        max_degree: Largest total degree a + b allowed in any series
        dealias: Apply the 2/3 rule around nonlinear products
    """

    n: int
    omega: DispersionPolynomial
    a: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]
    c: complex = 0j
    g: PowerSeries = field(default_factory=PowerSeries)
    f_bar: Tuple[PowerSeries, ...] = ()
    h_bar: Tuple[PowerSeries, ...] = ()
    p: float = 1.5
    max_degree: int = DEFAULT_MAX_DEGREE
    dealias: bool = False

    def __post_init__(self):
        n = int(self.n)
        if n not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.n}", key="general.n")
        object.__setattr__(self, "n", n)
        a = tuple(tuple(float(x) for x in row) for row in self.a)
        if len(a) != n or any(len(row) != n for row in a):
            raise ConfigurationError(f"P.a must be {n}x{n}", key="P.a")
        b = tuple(float(x) for x in self.b)
        if len(b) != n:
            raise ConfigurationError(f"P.b must have {n} entries", key="P.b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", complex(self.c))
        f_bar = tuple(self.f_bar) or tuple(PowerSeries() for _ in range(n))
        h_bar = tuple(self.h_bar) or tuple(PowerSeries() for _ in range(n))
        if len(f_bar) != n:
            raise ConfigurationError(f"f needs {n} components, got {len(f_bar)}", key="f")
        if len(h_bar) != n:
            raise ConfigurationError(f"h needs {n} components, got {len(h_bar)}", key="h")
        object.__setattr__(self, "f_bar", f_bar)
        object.__setattr__(self, "h_bar", h_bar)
        for exponents, _ in self.omega.terms:
            if len(exponents) != n:
                raise ConfigurationError(f"term {exponents} needs {n} exponents", key="omega.term")
        named = [("g", self.g)] + [(f"f.{j}", s) for j, s in enumerate(f_bar)] + [(f"h.{j}", s) for j, s in enumerate(h_bar)]
        for key, series in named:
            if series.constant_term != 0:
                raise ConfigurationError("series must vanish at u = 0 (nonzero constant term)", key=f"{key}.term.0.0")
            if series.degree > self.max_degree:
                raise ConfigurationError(
                    f"series degree {series.degree} exceeds general.max_degree = {self.max_degree}", key=f"{key}.term"
                )
        require_sobolev_exponent(self.p, n)

    @property
    def has_constraint(self) -> bool:
        return not all(s.is_zero for s in self.f_bar) and not all(s.is_zero for s in self.h_bar)

    def p_symbol(self, grid: PeriodicGrid) -> np.ndarray:
        return second_order_symbol(self.a, self.b, self.c, grid)

    def dispersion(self, grid: PeriodicGrid) -> np.ndarray:
        return self.omega.evaluate(grid.wavevectors)

    def check_grid(self, grid: PeriodicGrid) -> None:
        """Lattice checks: dimension, ellipticity of P off the origin when a constraint is present, finite omega."""
        if grid.ndim != self.n:
            raise ConfigurationError(f"grid has {grid.ndim} dimensions, system has n = {self.n}", key="general.n")
        if self.has_constraint:
            self.check_elliptic(grid)
        if not np.all(np.isfinite(self.dispersion(grid))):
            raise ConfigurationError("dispersion is not finite on the lattice", key="omega.term")

    def check_elliptic(self, grid: PeriodicGrid) -> None:
        symbol = self.p_symbol(grid)
        nonzero = grid.abs_wavenumber_sum > 0
        scale = 1.0 + float(np.max(np.abs(symbol)))
        singular = nonzero & (np.abs(symbol) <= ELLIPTICITY_TOL * scale)
        if np.any(singular):
            index = tuple(int(idx[i]) for idx, i in zip(grid.mode_indices, np.argwhere(singular)[0]))
            raise ConfigurationError(f"P symbol vanishes at nonzero mode {index}", key="P")


@lru_cache(maxsize=32)
def _inverse_p_symbol(spec: GeneralSystemSpec, grid: PeriodicGrid) -> np.ndarray:
    spec.check_grid(grid)
    spec.check_elliptic(grid)
    symbol = spec.p_symbol(grid)
    nonzero = grid.abs_wavenumber_sum > 0
    inverse = np.divide(1.0, symbol, out=np.zeros(grid.shape, dtype=complex), where=nonzero)
    inverse.setflags(write=False)
    return inverse


def grad_phi_coeffs(forcing: Sequence[np.ndarray], spec: GeneralSystemSpec, grid: PeriodicGrid) -> Tuple[np.ndarray, ...]:
    """Array-level solve of P phi = div f; returns the coefficients of each d_j phi."""
    divergence = sum(derivative_symbol(grid, j) * forcing[j] for j in range(grid.ndim))
    phi = _inverse_p_symbol(spec, grid) * divergence
    return tuple(derivative_symbol(grid, j) * phi for j in range(grid.ndim))


def solve_P(forcing_hat: Sequence[SpectralField], spec: GeneralSystemSpec) -> Tuple[SpectralField, ...]:
    """Solve the constraint for grad(phi) given the transforms of the f components.

    phi^ = sum_j i k_j f_j^ / P(k) with the origin mode 0, and (d_j phi)^ = i k_j phi^.

    Raises:
        ConfigurationError: If P vanishes at a nonzero lattice mode or shapes disagree
    """
    if len(forcing_hat) != spec.n:
        raise ConfigurationError(f"need {spec.n} forcing components, got {len(forcing_hat)}", key="f")
    grid = forcing_hat[0].grid
    for component in forcing_hat[1:]:
        if not grid.compatible(component.grid):
            raise ConfigurationError("forcing components live on different grids", key="grid")
    gradients = grad_phi_coeffs([f.coeffs for f in forcing_hat], spec, grid)
    return tuple(forcing_hat[0].with_coeffs(c) for c in gradients)


def general_rhs_coeffs(coeffs: np.ndarray, grid: PeriodicGrid, spec: GeneralSystemSpec) -> np.ndarray:
    """Array-level transform of g + h . grad(phi)."""
    if spec.dealias:
        coeffs = dealias(coeffs, grid)
    u = inverse_coeffs(coeffs, grid)
    uc = np.conj(u)
    result = spec.g.evaluate(u, uc)
    if spec.has_constraint:
        forcing = [forward_coeffs(f.evaluate(u, uc), grid) for f in spec.f_bar]
        gradients = grad_phi_coeffs(forcing, spec, grid)
        for h, gradient in zip(spec.h_bar, gradients):
            if not h.is_zero:
                result = result + h.evaluate(u, uc) * inverse_coeffs(gradient, grid)
    result = forward_coeffs(result, grid)
    if spec.dealias:
        result = dealias(result, grid)
    return result


def general_rhs(u_hat: SpectralField, spec: GeneralSystemSpec) -> SpectralField:
    """Transform of g(u, u*) + sum_j h_j(u, u*) d_j phi, evaluated pseudospectrally."""
    spec.check_grid(u_hat.grid)
    return u_hat.with_coeffs(general_rhs_coeffs(u_hat.coeffs, u_hat.grid, spec))


class GeneralSystem:
    """General dispersive dynamics for the Picard integrator: u_t = -i omega u - i N(u)."""

    def __init__(self, grid: PeriodicGrid, spec: GeneralSystemSpec):
        spec.check_grid(grid)
        self.grid = grid
        self.spec = spec
        exponent = -1j * spec.dispersion(grid)
        exponent.setflags(write=False)
        self.exponent = exponent

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        return general_rhs_coeffs(coeffs, self.grid, self.spec)

    def propagator(self, t: float) -> np.ndarray:
        return np.exp(self.exponent * t)


def general_free_evolve(field_hat: SpectralField, spec: GeneralSystemSpec, t: float) -> SpectralField:
    """Free flow exp(-i omega(k) t)."""
    return field_hat.with_coeffs(field_hat.coeffs * GeneralSystem(field_hat.grid, spec).propagator(t))


def general_evolve(u0: SpectralField, spec: GeneralSystemSpec, t_end: float, dt: float, cfg: PicardConfig,
                   sink: Optional[StepSink] = None) -> Trajectory:
    """Evolve a general system with the same Picard-Duhamel machinery as DS-II."""
    return evolve_system(GeneralSystem(u0.grid, spec), u0, t_end, dt, cfg, sink)


def general_existence_time(u0: SpectralField, spec: GeneralSystemSpec, cfg: PicardConfig,
                           T_max: float) -> Tuple[float, ExistenceReport]:
    """Existence-time bisection for a general system."""
    return estimate_existence_time(GeneralSystem(u0.grid, spec), u0, cfg, T_max)


def ds2_system_spec(params: DS2Params) -> GeneralSystemSpec:
    """DS-II written as a general system."""
    zero = PowerSeries()
    return GeneralSystemSpec(
        n=2,
        omega=DispersionPolynomial((((2, 0), 1.0), ((0, 2), -1.0))),
        a=((1.0, 0.0), (0.0, 1.0)),
        b=(0.0, 0.0),
        c=0j,
        g=PowerSeries((((2, 1), params.gamma),)),
        f_bar=(PowerSeries((((1, 1), params.mu),)), zero),
        h_bar=(PowerSeries((((1, 0), params.lam),)), zero),
        p=params.p,
        dealias=params.dealias,
    )


def nls_system_spec(gamma: float, p: float = 1.0) -> GeneralSystemSpec:
    """One-dimensional cubic NLS, i u_t = -u_xx + gamma |u|^2 u, as a general system."""
    return GeneralSystemSpec(
        n=1,
        omega=DispersionPolynomial((((2,), 1.0),)),
        a=((1.0,),),
        b=(0.0,),
        g=PowerSeries((((2, 1), gamma),)),
        p=p,
    )
