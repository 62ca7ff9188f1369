"""
Periodic grids, discrete Fourier transforms and weighted Sobolev norms.

Conventions
-----------
The physical domain is centred on the origin: along an axis with n points
and period L the samples sit at x_j = -L/2 + j*L/n. Wavenumbers are
k_j = 2*pi*j/L for j in {-n/2, ..., n/2 - 1}.

Coefficients are stored in the unshifted FFT ordering (negative modes in the
upper half of each axis). The forward transform carries the 1/(nx*ny)
normalization together with the origin phase exp(-i k.x0), so a plane wave
A*exp(i(k_j x + m_l y)) has exactly one coefficient, A, at index (j, l).

The H^p norm weights each mode by (1 + |k| + |m|)^p and each coefficient by
the k-space cell measure (2*pi/Lx)*(2*pi/Ly); the value is therefore stable
under grid refinement at fixed period.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft

from .errors import ConfigurationError, NumericalError

AXIS_NAMES = ("x", "y", "z")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PeriodicGrid:
    """Periodic truncation of R^n with a uniform sample lattice.

    Args:
        points: Samples per axis, each even and at least 4
        lengths: Period length per axis
    """

    points: Tuple[int, ...]
    lengths: Tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(n) for n in self.points)
        lengths = tuple(float(L) for L in self.lengths)
        if not 1 <= len(points) <= 3:
            raise ConfigurationError(f"grid dimension must be 1, 2 or 3, got {len(points)}", key="general.n")
        if len(points) != len(lengths):
            raise ConfigurationError("grid needs one period length per axis", key="grid")
        for axis, n in enumerate(points):
            if n < 4 or n % 2:
                raise ConfigurationError(
                    f"points per axis must be even and >= 4, got {n}",
                    key=f"grid.n{AXIS_NAMES[axis]}",
                )
        for axis, length in enumerate(lengths):
            if not (np.isfinite(length) and length > 0):
                raise ConfigurationError(
                    f"period length must be positive and finite, got {length}",
                    key=f"grid.L{AXIS_NAMES[axis]}",
                )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lengths", lengths)

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.points))

    @property
    def cell_measure(self) -> float:
        """Volume of one cell of the wavenumber lattice."""
        return float(np.prod([2.0 * np.pi / L for L in self.lengths]))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def compatible(self, other: "PeriodicGrid") -> bool:
        """Grids are compatible for arithmetic iff all points and lengths agree."""
        return self.points == other.points and self.lengths == other.lengths

    @cached_property
    def mode_indices(self) -> Tuple[np.ndarray, ...]:
        """Signed mode index per axis, in storage order."""
        return tuple(_frozen(np.rint(sp_fft.fftfreq(n, 1.0 / n)).astype(np.int64)) for n in self.points)

    @cached_property
    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """One-dimensional wavenumber array per axis, in storage order."""
        return tuple(
            _frozen(2.0 * np.pi / L * idx.astype(float))
            for L, idx in zip(self.lengths, self.mode_indices)
        )

    @cached_property
    def wavevectors(self) -> Tuple[np.ndarray, ...]:
        """Wavenumber components broadcast to the full grid shape."""
        return tuple(_frozen(k) for k in np.meshgrid(*self.wavenumbers, indexing="ij"))

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """One-dimensional sample coordinates per axis, centred on the origin."""
        return tuple(
            _frozen(-L / 2.0 + np.arange(n) * (L / n))
            for n, L in zip(self.points, self.lengths)
        )

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Sample coordinates broadcast to the full grid shape."""
        return tuple(_frozen(x) for x in np.meshgrid(*self.coordinates, indexing="ij"))

    @cached_property
    def origin_phase(self) -> np.ndarray:
        """exp(i k.x0) for the lower-left sample x0 of the centred domain."""
        phase = np.zeros(self.shape)
        for k, x in zip(self.wavevectors, self.coordinates):
            phase = phase + k * x[0]
        return _frozen(np.exp(1j * phase))

    @cached_property
    def abs_wavenumber_sum(self) -> np.ndarray:
        """|k_1| + ... + |k_n| per mode."""
        return _frozen(sum(np.abs(k) for k in self.wavevectors))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps modes with |j| < n/3 on every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for axis, (n, idx) in enumerate(zip(self.points, self.mode_indices)):
            keep = np.abs(idx) < n / 3.0
            shape = [1] * self.ndim
            shape[axis] = n
            mask = mask & keep.reshape(shape)
        return _frozen(mask)


class Grid2D(PeriodicGrid):
    """Two-dimensional periodic grid with nx x ny points and periods Lx, Ly."""

    def __init__(self, nx: int, ny: int, Lx: float = 2.0 * np.pi, Ly: float = 2.0 * np.pi):
        super().__init__((nx, ny), (Lx, Ly))

    def __reduce__(self):
        return (Grid2D, (self.nx, self.ny, self.Lx, self.Ly))

    @property
    def nx(self) -> int:
        return self.points[0]

    @property
    def ny(self) -> int:
        return self.points[1]

    @property
    def Lx(self) -> float:
        return self.lengths[0]

    @property
    def Ly(self) -> float:
        return self.lengths[1]


def make_grid(points: Sequence[int], lengths: Sequence[float]) -> PeriodicGrid:
    """Build a grid, specializing to Grid2D in two dimensions."""
    if len(points) == 2 and len(lengths) == 2:
        return Grid2D(points[0], points[1], lengths[0], lengths[1])
    return PeriodicGrid(tuple(points), tuple(lengths))


def require_sobolev_exponent(p: float, ndim: int, key: str = "params.p") -> float:
    """Validate a Sobolev exponent against the algebra threshold p > n/2."""
    p = float(p)
    if not np.isfinite(p) or p <= ndim / 2.0:
        raise ConfigurationError(f"Sobolev exponent must satisfy p > {ndim / 2.0:g}, got {p}", key=key)
    return p


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex field held as Fourier coefficients on a periodic grid.

    The coefficient array is copied on construction and made read-only.
    """

    grid: PeriodicGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.shape != self.grid.shape:
            raise ConfigurationError(
                f"coefficient array has shape {coeffs.shape}, grid expects {self.grid.shape}",
                key="grid",
            )
        if not np.all(np.isfinite(coeffs)):
            raise NumericalError("field has non-finite coefficients")
        object.__setattr__(self, "coeffs", _frozen(coeffs))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def single_mode(cls, grid: PeriodicGrid, index: Sequence[int], amplitude: complex = 1.0) -> "SpectralField":
        """Field with one nonzero coefficient at a signed mode index."""
        coeffs = np.zeros(grid.shape, dtype=np.complex128)
        coeffs[tuple(int(j) % n for j, n in zip(index, grid.points))] = amplitude
        return cls(grid, coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def values(self) -> np.ndarray:
        """Samples of the field on the physical grid."""
        return inverse_transform(self)

    def coefficient(self, index: Sequence[int]) -> complex:
        """Coefficient at a signed mode index."""
        return complex(self.coeffs[tuple(int(j) % n for j, n in zip(index, self.grid.points))])

    def _check(self, other: "SpectralField") -> None:
        if not self.grid.compatible(other.grid):
            raise ConfigurationError(f"incompatible grids {self.grid} and {other.grid}", key="grid")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def forward_coeffs(values: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Array-level forward transform, no validation."""
    return sp_fft.fftn(values, norm="forward") * np.conj(grid.origin_phase)


def inverse_coeffs(coeffs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Array-level inverse transform, no validation."""
    return sp_fft.ifftn(coeffs * grid.origin_phase, norm="forward")


def forward_transform(values: np.ndarray, grid: PeriodicGrid) -> SpectralField:
    """Transform physical samples to a SpectralField.

    Args:
        values: Complex samples, shape equal to grid.shape
        grid: Grid the samples live on

    Returns:
        Field whose coefficient at (j, l) is the amplitude of exp(i(k_j x + m_l y))

    Raises:
        ConfigurationError: If the array shape does not match the grid
    """
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ConfigurationError(
            f"sample array has shape {values.shape}, grid expects {grid.shape}", key="grid"
        )
    return SpectralField(grid, forward_coeffs(values.astype(np.complex128), grid))


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Samples of a field on its physical grid."""
    return inverse_coeffs(field.coeffs, field.grid)


def dealias(coeffs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Zero the modes outside the 2/3-rule band."""
    return np.where(grid.dealias_mask, coeffs, 0.0)


def sobolev_weight(grid: PeriodicGrid, p: float) -> np.ndarray:
    """(1 + |k_1| + ... + |k_n|)^(2p) per mode."""
    return (1.0 + grid.abs_wavenumber_sum) ** (2.0 * p)


def sobolev_norm_coeffs(coeffs: np.ndarray, grid: PeriodicGrid, p: float) -> float:
    """Array-level H^p norm; coeffs may carry extra leading axes (summed over)."""
    weight = sobolev_weight(grid, p)
    total = np.sum(weight * (coeffs.real ** 2 + coeffs.imag ** 2), axis=tuple(range(-grid.ndim, 0)))
    return np.sqrt(grid.cell_measure * total)


def sobolev_norm(field: SpectralField, p: float) -> float:
    """Discrete H^p norm sqrt(w * sum (1+|k|+|m|)^(2p) |c|^2), w the k-space cell measure."""
    return float(sobolev_norm_coeffs(field.coeffs, field.grid, p))


def l2_norm(field: SpectralField) -> float:
    """Discrete L^2 norm of the physical samples, evaluated through Parseval."""
    c = field.coeffs
    return float(np.sqrt(field.grid.volume * np.sum(c.real ** 2 + c.imag ** 2)))


def pointwise_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Transform of the physical-space product f*g (periodic convolution of coefficients)."""
    f._check(g)
    grid = f.grid
    return SpectralField(grid, forward_coeffs(inverse_coeffs(f.coeffs, grid) * inverse_coeffs(g.coeffs, grid), grid))


def algebra_check(f: SpectralField, g: SpectralField, p: float) -> Tuple[float, float]:
    """Measure how the H^p norm of a product compares with the product of norms.

    Args:
        f: First factor
        g: Second factor, on a compatible grid
        p: Sobolev exponent, above the algebra threshold n/2

    Returns:
        Tuple of (||f g||_p, ||f g||_p / (||f||_p ||g||_p)); a 0/0 ratio is reported as 0
    """
    require_sobolev_exponent(p, f.grid.ndim)
    product = pointwise_product(f, g)
    lhs = sobolev_norm(product, p)
    denominator = sobolev_norm(f, p) * sobolev_norm(g, p)
    if denominator == 0.0:
        return lhs, 0.0
    return lhs, lhs / denominator
