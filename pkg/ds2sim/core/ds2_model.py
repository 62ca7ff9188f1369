"""
Davey-Stewartson-II right-hand side.

    i u_t + u_xx - u_yy = gamma |u|^2 u + lambda u phi_x
    phi_xx + phi_yy     = mu (|u|^2)_x,   grad(phi) -> 0

The mean-flow potential is eliminated mode by mode: with the transform
conventions of ``spectral``, (phi_x)^ = mu k^2/(k^2+m^2) (|u|^2)^, and the
origin mode is set to zero (zero-mean phi). Nonlinear terms are evaluated
pseudospectrally; ``convolution_oracle_N`` evaluates the same operator by
literal convolutions over the mode lattice and is meant for small grids.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import ConfigurationError, GridTooLargeError
from .spectral import (
    PeriodicGrid,
    SpectralField,
    dealias,
    forward_coeffs,
    inverse_coeffs,
    require_sobolev_exponent,
)

ORACLE_MAX_MODES = 16 * 16


@dataclass(frozen=True)
class DS2Params:
    """Physical constants of the DS-II system.

    Args:
        gamma: Cubic coefficient
        lam: Mean-flow coupling (lambda)
        mu: Forcing coefficient of the elliptic constraint
        p: Sobolev exponent used for norms and convergence, p > 1
        dealias: Apply the 2/3 rule around nonlinear products
    """

    gamma: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    p: float = 1.5
    dealias: bool = False

    def __post_init__(self):
        for key, value in (("params.gamma", self.gamma), ("params.lambda", self.lam), ("params.mu", self.mu)):
            if not np.isfinite(value):
                raise ConfigurationError(f"must be finite, got {value}", key=key)
        require_sobolev_exponent(self.p, 2)

    @property
    def is_linear(self) -> bool:
        return self.gamma == 0.0 and self.lam * self.mu == 0.0


def _require_2d(grid: PeriodicGrid) -> None:
    if grid.ndim != 2:
        raise ConfigurationError(f"DS-II needs a two-dimensional grid, got {grid.ndim} dimensions", key="grid")


class DispersionPhase:
    """Per-mode exponent i(m^2 - k^2) of the free DS-II flow."""

    def __init__(self, grid: PeriodicGrid):
        _require_2d(grid)
        self.grid = grid
        k, m = grid.wavevectors
        exponent = 1j * (m ** 2 - k ** 2)
        exponent.setflags(write=False)
        self.exponent = exponent

    def propagator(self, t: float) -> np.ndarray:
        """exp(i(m^2 - k^2) t) per mode."""
        return np.exp(self.exponent * t)


@lru_cache(maxsize=32)
def dispersion_phase(grid: PeriodicGrid) -> DispersionPhase:
    """Shared, immutable dispersion phase for a grid."""
    return DispersionPhase(grid)


@lru_cache(maxsize=32)
def _phi_multiplier(grid: PeriodicGrid) -> np.ndarray:
    k, m = grid.wavevectors
    denominator = k ** 2 + m ** 2
    multiplier = np.divide(k ** 2, denominator, out=np.zeros(grid.shape), where=denominator > 0)
    multiplier.setflags(write=False)
    return multiplier


def free_evolve(field: SpectralField, t: float) -> SpectralField:
    """Linear DS-II flow: multiply mode (k, m) by exp(i(m^2 - k^2) t)."""
    if not np.isfinite(t):
        raise ConfigurationError(f"evolution time must be finite, got {t}", key="time")
    return field.with_coeffs(field.coeffs * dispersion_phase(field.grid).propagator(t))


def _density_coeffs(coeffs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    u = inverse_coeffs(coeffs, grid)
    return forward_coeffs(u.real ** 2 + u.imag ** 2, grid)


def phi_x_coeffs(coeffs: np.ndarray, grid: PeriodicGrid, mu: float) -> np.ndarray:
    """Array-level (phi_x)^ from u^."""
    return mu * _phi_multiplier(grid) * _density_coeffs(coeffs, grid)


def phi_x_from_u(u_hat: SpectralField, mu: float) -> SpectralField:
    """Transform of phi_x, phi the zero-mean solution of the elliptic constraint."""
    _require_2d(u_hat.grid)
    return u_hat.with_coeffs(phi_x_coeffs(u_hat.coeffs, u_hat.grid, mu))


def mean_flow_potential(u_hat: SpectralField, mu: float) -> SpectralField:
    """Transform of the zero-mean potential phi: -i mu k/(k^2+m^2) (|u|^2)^."""
    grid = u_hat.grid
    _require_2d(grid)
    k, m = grid.wavevectors
    denominator = k ** 2 + m ** 2
    symbol = np.divide(-1j * mu * k, denominator, out=np.zeros(grid.shape, dtype=complex), where=denominator > 0)
    return u_hat.with_coeffs(symbol * _density_coeffs(u_hat.coeffs, grid))


def mean_flow_gradient(u_hat: SpectralField, mu: float) -> Tuple[SpectralField, SpectralField]:
    """Transforms of (phi_x, phi_y)."""
    phi = mean_flow_potential(u_hat, mu)
    k, m = u_hat.grid.wavevectors
    return phi.with_coeffs(1j * k * phi.coeffs), phi.with_coeffs(1j * m * phi.coeffs)


def nonlinear_physical(u: np.ndarray, grid: PeriodicGrid, params: DS2Params) -> np.ndarray:
    """gamma |u|^2 u + lambda u phi_x evaluated on physical samples."""
    density = u.real ** 2 + u.imag ** 2
    result = params.gamma * density * u
    if params.lam != 0.0 and params.mu != 0.0:
        phi_x = inverse_coeffs(params.mu * _phi_multiplier(grid) * forward_coeffs(density, grid), grid)
        result = result + params.lam * u * phi_x
    return result


def nonlinear_coeffs(coeffs: np.ndarray, grid: PeriodicGrid, params: DS2Params) -> np.ndarray:
    """Array-level pseudospectral N(u)^, honouring the dealiasing flag."""
    if params.dealias:
        coeffs = dealias(coeffs, grid)
    u = inverse_coeffs(coeffs, grid)
    result = forward_coeffs(nonlinear_physical(u, grid, params), grid)
    if params.dealias:
        result = dealias(result, grid)
    return result


def nonlinear_N(u_hat: SpectralField, params: DS2Params) -> SpectralField:
    """Transform of gamma |u|^2 u + lambda u phi_x, evaluated pseudospectrally."""
    _require_2d(u_hat.grid)
    return u_hat.with_coeffs(nonlinear_coeffs(u_hat.coeffs, u_hat.grid, params))


def conjugate_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the complex conjugate field: conj(c(-k, -m))."""
    axes = tuple(range(coeffs.ndim))
    return np.conj(np.roll(np.flip(coeffs, axis=axes), 1, axis=axes))


def periodic_convolution(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Literal convolution over the periodic mode lattice: (a*b)[J] = sum_j a[j] b[J - j]."""
    result = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.complex128)
    for index in zip(*np.nonzero(a)):
        result += a[index] * np.roll(b, index, axis=tuple(range(b.ndim)))
    return result


def convolution_oracle_N(u_hat: SpectralField, params: DS2Params, allow_large: bool = False) -> SpectralField:
    """Evaluate the DS-II nonlinearity by direct convolutions of coefficients.

    gamma (u * u' * u) + lambda mu u * [k^2/(k^2+m^2) (u * u')], where * is the
    periodic lattice convolution and u' the coefficients of conj(u). Agrees with
    ``nonlinear_N`` when dealiasing is off.

    Raises:
        GridTooLargeError: Grid above 16x16 and allow_large not set
    """
    grid = u_hat.grid
    _require_2d(grid)
    if grid.size > ORACLE_MAX_MODES and not allow_large:
        raise GridTooLargeError(
            f"convolution oracle refuses a {grid.points[0]}x{grid.points[1]} grid "
            "(limit 16x16); pass allow_large=True to override",
            key="grid",
        )
    u = u_hat.coeffs
    density = periodic_convolution(u, conjugate_coeffs(u))
    result = params.gamma * periodic_convolution(density, u)
    if params.lam != 0.0 and params.mu != 0.0:
        result = result + params.lam * params.mu * periodic_convolution(u, _phi_multiplier(grid) * density)
    return u_hat.with_coeffs(result)


class DS2System:
    """DS-II dynamics in the form the Picard integrator consumes.

    u_t = exponent * u - i N(u), with exponent = i(m^2 - k^2).
    """

    def __init__(self, grid: PeriodicGrid, params: DS2Params):
        self.grid = grid
        self.params = params
        self.exponent = dispersion_phase(grid).exponent

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        return nonlinear_coeffs(coeffs, self.grid, self.params)

    @property
    def is_linear(self) -> bool:
        return self.params.is_linear
