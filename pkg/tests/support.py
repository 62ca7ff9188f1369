"""
Shared fixtures for the test suite.
"""
import os
from typing import Dict, Optional

import numpy as np

from ds2sim.core.spectral import PeriodicGrid, SpectralField, forward_transform


def random_field(grid: PeriodicGrid, seed: int = 0) -> SpectralField:
    """Field with independent standard complex normal samples."""
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return forward_transform(values, grid)


def smooth_field(grid: PeriodicGrid, rng: np.random.Generator, max_mode: int = 3) -> SpectralField:
    """Random band-limited field with modes |j| <= max_mode and decaying amplitudes.

    The same generator state gives the same function on every grid that
    resolves the band, so refinements sample one continuous field.
    """
    size = 2 * max_mode + 1
    raw = rng.standard_normal((size,) * grid.ndim) + 1j * rng.standard_normal((size,) * grid.ndim)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    for offset in np.ndindex(*raw.shape):
        index = tuple(o - max_mode for o in offset)
        decay = (1.0 + sum(abs(j) for j in index)) ** -2
        coeffs[tuple(j % n for j, n in zip(index, grid.points))] = raw[offset] * decay
    return SpectralField(grid, coeffs)


def gaussian(grid: PeriodicGrid, amplitude: float = 1.0, width: float = 1.0) -> SpectralField:
    """amplitude * exp(-|x|^2 / width^2), centred on the origin."""
    r2 = sum(x ** 2 for x in grid.mesh)
    return forward_transform(amplitude * np.exp(-r2 / width ** 2) + 0j, grid)


def l2_distance(a: SpectralField, b: SpectralField) -> float:
    return float(np.sqrt(a.grid.volume * np.sum(np.abs(a.coeffs - b.coeffs) ** 2)))


def write_config(directory: str, entries: Dict[str, object], name: str = "run.cfg",
                 output_dir: Optional[str] = None) -> str:
    """Write a config file; output.dir defaults to a subdirectory of directory."""
    lines = ["# test configuration"]
    merged = dict(entries)
    merged.setdefault("output.dir", output_dir or os.path.join(directory, "out"))
    for key, value in merged.items():
        lines.append(f"{key} = {value}")
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path
