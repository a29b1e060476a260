"""Densities tabulated on a uniform one-dimensional grid."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["DensityGrid", "trapezoid_mass", "grid_l1"]


@dataclass
class DensityGrid:
    """Density values on ``n_points`` equispaced nodes of ``[x_min, x_max]``.

    ``n_points`` must be a power of two; the solvers rely on it for their
    FFT lengths.
    """

    x_min: float
    x_max: float
    values: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.size
        if self.values.ndim != 1 or n < 2 or n & (n - 1):
            raise DomainError("a density grid needs a power-of-two number of points")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")
        if self.time_stamp < 0:
            raise DomainError("time_stamp must be nonnegative")

    @property
    def n_points(self):
        return self.values.size

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self):
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def mass(self):
        return trapezoid_mass(self.values, self.dx)

    def with_values(self, values, time_stamp=None):
        return DensityGrid(self.x_min, self.x_max, values,
                           self.time_stamp if time_stamp is None else time_stamp)

    def to_csv(self, path):
        """Write ``z,p`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            fh.write("z,p\n")
            for z, p in zip(self.points, self.values):
                fh.write(f"{z:.17g},{p:.17g}\n")

    @classmethod
    def from_csv(cls, path, time_stamp=0.0):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["z", "p"]:
                raise DomainError(f"{path}: expected header 'z,p', got {header}")
            rows = np.array([[float(a), float(b)] for a, b in reader])
        z = rows[:, 0]
        if not np.allclose(np.diff(z), (z[-1] - z[0]) / (z.size - 1), rtol=1e-9, atol=1e-12):
            raise DomainError(f"{path}: abscissae are not equispaced")
        return cls(float(z[0]), float(z[-1]), rows[:, 1], time_stamp)


def trapezoid_mass(values, dx):
    values = np.asarray(values, dtype=float)
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def grid_l1(a, b):
    """Trapezoid L1 distance between two densities on the same grid."""
    if a.n_points != b.n_points or a.x_min != b.x_min or a.x_max != b.x_max:
        raise DomainError("grids differ")
    return trapezoid_mass(np.abs(a.values - b.values), a.dx)
