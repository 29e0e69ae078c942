"""Containers for sampled 1D signals and 2D images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ParameterError


@dataclass
class Grid1D:
    """Values on the equispaced grid ``t_j = j * h``."""

    n: int
    h: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n,):
            raise DimensionError(f"expected {self.n} values, got shape {self.values.shape}")
        if not self.h > 0:
            raise ParameterError("grid step h must be positive")

    @property
    def t(self):
        return self.h * np.arange(self.n)


@dataclass
class Lattice2D:
    """Row-major image with ``ny`` rows and ``nx`` columns.

    ``h`` is the step along a row (x direction) and ``h_prime`` the step
    between rows (y direction).
    """

    nx: int
    ny: int
    h: float
    h_prime: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.nx * self.ny:
            raise DimensionError(
                f"expected {self.nx * self.ny} values for a {self.ny}x{self.nx} lattice, "
                f"got {self.values.size}"
            )
        if not (self.h > 0 and self.h_prime > 0):
            raise ParameterError("lattice steps must be positive")

    @property
    def image(self):
        return self.values.reshape(self.ny, self.nx)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @classmethod
    def from_image(cls, image, h=1.0, h_prime=None):
        image = np.asarray(image, dtype=float)
        ny, nx = image.shape
        return cls(nx, ny, h, h if h_prime is None else h_prime, image.reshape(-1))
