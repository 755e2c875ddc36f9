"""Uniform space-time grids, scalar solution fields, noise injection and
the two field-level quality metrics (percentage noise level and coefficient
root-sum-square error).

A field is stored as an ``nt x nx`` matrix, one time frame per row, so the
per-time-point spatial vectors used downstream are contiguous row slices.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

MIN_POINTS = 5  # smallest grid that hosts the widest derivative stencil


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid: ``nt`` time points spaced ``dt``,
    ``nx`` space points spaced ``dx``."""

    nt: int
    nx: int
    dt: float
    dx: float
    t0: float = 0.0
    x0: float = 0.0

    def __post_init__(self) -> None:
        if self.nt < MIN_POINTS or self.nx < MIN_POINTS:
            raise ValueError(
                f"grid dimensions too small: need nt, nx >= {MIN_POINTS}, "
                f"got nt={self.nt}, nx={self.nx}"
            )
        if not (self.dt > 0 and self.dx > 0):
            raise ValueError(
                f"grid steps must be positive, got dt={self.dt}, dx={self.dx}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt, self.nx)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)


def make_grid(nt: int, nx: int, dt: float, dx: float,
              t0: float = 0.0, x0: float = 0.0) -> Grid:
    """Build a grid, validating dimensions and step signs."""
    return Grid(nt=int(nt), nx=int(nx), dt=float(dt), dx=float(dx),
                t0=float(t0), x0=float(x0))


@dataclass(frozen=True)
class SolutionField:
    """Scalar field u(t, x) sampled on a grid; rows are time frames."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", values)

    def crop(self, t_slice: slice, x_slice: slice) -> "SolutionField":
        """Contiguous sub-field; the grid origin moves with the crop."""
        sub = self.values[t_slice, x_slice]
        t_start = t_slice.indices(self.grid.nt)[0]
        x_start = x_slice.indices(self.grid.nx)[0]
        grid = Grid(nt=sub.shape[0], nx=sub.shape[1],
                    dt=self.grid.dt, dx=self.grid.dx,
                    t0=self.grid.t0 + t_start * self.grid.dt,
                    x0=self.grid.x0 + x_start * self.grid.dx)
        return SolutionField(grid=grid, values=sub.copy())


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise with sigma = fraction * max |u|, seeded."""

    fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fraction < 0:
            raise ValueError(f"noise fraction must be >= 0, got {self.fraction}")


def add_noise(field: SolutionField, spec: NoiseSpec) -> SolutionField:
    """Add zero-mean Gaussian noise, sigma = fraction of the field's max
    absolute value. Deterministic for a fixed seed; fraction 0 returns a
    bitwise-equal copy."""
    if spec.fraction == 0.0:
        return SolutionField(grid=field.grid, values=field.values.copy())
    sigma = spec.fraction * np.max(np.abs(field.values))
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, sigma, size=field.values.shape)
    return SolutionField(grid=field.grid, values=field.values + noise)


def noise_level(clean: SolutionField | np.ndarray,
                noisy: SolutionField | np.ndarray) -> float:
    """Percentage Frobenius distance between the clean and noisy fields:
    ||w0 - w~||_F / ||w0||_F * 100."""
    w0 = clean.values if isinstance(clean, SolutionField) else np.asarray(clean, float)
    w1 = noisy.values if isinstance(noisy, SolutionField) else np.asarray(noisy, float)
    if w0.shape != w1.shape:
        raise ValueError(f"shape mismatch: {w0.shape} vs {w1.shape}")
    denom = np.linalg.norm(w0)
    if denom == 0.0:
        raise ValueError("noise level undefined for a zero clean field")
    return float(np.linalg.norm(w0 - w1) / denom * 100.0)


def coeff_error(true_w, pred_w) -> float:
    """Root-sum-square distance between two coefficient vectors aligned
    by term identity (absent terms contribute coefficient 0)."""
    a = np.asarray(true_w, dtype=float)
    b = np.asarray(pred_w, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"coefficient length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


_HEADER_RE = re.compile(
    r"#\s*nt=(\S+)\s+nx=(\S+)\s+dt=(\S+)\s+dx=(\S+)\s*$"
)


def write_field_csv(field: SolutionField, path) -> None:
    """Write one time frame per row, 17 significant digits (bit-exact
    float64 round trip), preceded by the grid header line."""
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"# nt={g.nt} nx={g.nx} dt={g.dt:.17g} dx={g.dx:.17g}\n")
        for row in field.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field_csv(path) -> SolutionField:
    """Inverse of :func:`write_field_csv`. The grid origin is not stored
    in the header and reads back as (0, 0)."""
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER_RE.match(header)
        if m is None:
            raise ValueError(f"missing or malformed field header in {path!r}")
        nt, nx = int(m.group(1)), int(m.group(2))
        dt, dx = float(m.group(3)), float(m.group(4))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    if values.shape != (nt, nx):
        raise ValueError(
            f"field body shape {values.shape} does not match header ({nt}, {nx})"
        )
    return SolutionField(grid=Grid(nt=nt, nx=nx, dt=dt, dx=dx), values=values)
