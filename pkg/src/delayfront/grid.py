"""Uniform 1-D meshes with the delay lag snapped onto the mesh."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Uniform mesh z_min, z_min + dz, ..., z_max with ``n`` points."""

    z_min: float
    z_max: float
    n: int

    def __post_init__(self):
        if self.n < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points, got {self.n}")
        if not self.z_max > self.z_min:
            raise ValueError("grid must have z_max > z_min")

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n - 1)

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n)

    @classmethod
    def snapped(cls, z_min: float, z_max: float, dz: float, lag: float = 0.0) -> "Grid":
        """Mesh whose spacing divides ``lag`` exactly, with spacing at most ``dz``.

        The right end is moved outward (never inward) to the nearest mesh point.
        """
        if dz <= 0:
            raise ValueError("dz must be positive")
        if lag > 0:
            dz = lag / math.ceil(lag / dz - 1e-9)
        n = int(math.ceil((z_max - z_min) / dz - 1e-9)) + 1
        return cls(z_min, z_min + (n - 1) * dz, n)

    def lag_cells(self, lag: float) -> int:
        """Integer number of cells spanned by ``lag``; raises if not aligned."""
        if lag == 0:
            return 0
        m = int(round(lag / self.dz))
        if abs(m * self.dz - lag) > 1e-9 * max(1.0, lag):
            raise ValueError(f"lag {lag} is not a multiple of dz={self.dz}")
        return m

    def index_of(self, z: float) -> int:
        """Nearest mesh index to ``z`` (clipped into the grid)."""
        return int(min(max(round((z - self.z_min) / self.dz), 0), self.n - 1))

    def to_dict(self) -> dict:
        return {"z_min": self.z_min, "z_max": self.z_max, "n": self.n, "dz": self.dz}


@dataclass
class Field:
    """Real samples on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(f"field has shape {self.values.shape}, grid has {self.grid.n} points")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")
