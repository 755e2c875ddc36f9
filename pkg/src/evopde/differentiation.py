"""Derivative factor pool for a solution field.

Two routes produce the same stack of factors {1, u, u_t, u_tt, u_x, u_xx,
u_xxx}: plain central finite differences (clean data) and local
least-squares polynomial fits along each axis (noisy data). Both are
restricted to the interior region where every stencil is defined: one
frame of time margin and two columns of space margin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import savgol_coeffs

from .grid_field import Grid, SolutionField

CONST = "1"
U = "u"
U_T = "u_t"
U_TT = "u_tt"
U_X = "u_x"
U_XX = "u_xx"
U_XXX = "u_xxx"

DEFAULT_POOL: tuple[str, ...] = (CONST, U, U_T, U_TT, U_X, U_XX, U_XXX)

T_MARGIN = 1  # second time difference needs one frame each side
X_MARGIN = 2  # third space difference needs two columns each side


@dataclass
class DerivativeStack:
    """Factor matrices on the common grid interior, keyed by factor name."""

    grid: Grid
    factors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shapes = {f.shape for f in self.factors.values()}
        if len(shapes) > 1:
            raise ValueError(f"factor matrices disagree in shape: {shapes}")

    @property
    def interior_shape(self) -> tuple[int, int]:
        return (self.grid.nt - 2 * T_MARGIN, self.grid.nx - 2 * X_MARGIN)

    @property
    def n_points(self) -> int:
        nt, nx = self.interior_shape
        return nt * nx

    def __contains__(self, name: str) -> bool:
        return name in self.factors

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.factors[name]
        except KeyError:
            raise KeyError(f"unknown factor {name!r}; have {sorted(self.factors)}")

    def register(self, name: str, values: np.ndarray) -> None:
        """Extensibility hook: add a custom factor matrix (interior shape)."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.interior_shape:
            raise ValueError(
                f"factor {name!r} has shape {values.shape}, "
                f"expected interior {self.interior_shape}"
            )
        self.factors[name] = values


def _check_field(field: SolutionField) -> np.ndarray:
    g = field.grid
    if g.nt < 2 * T_MARGIN + 1 or g.nx < 2 * X_MARGIN + 1:
        raise ValueError(
            f"grid too small for derivative stencils: nt={g.nt}, nx={g.nx}"
        )
    return field.values


def fd_derivatives(field: SolutionField) -> DerivativeStack:
    """Central finite differences on the grid interior.

    u_t, u_x, u_tt, u_xx use the three-point central stencils; u_xxx the
    five-point antisymmetric one. All are second-order accurate and exact
    on polynomials up to the stencil order.
    """
    u = _check_field(field)
    dt, dx = field.grid.dt, field.grid.dx
    ti = slice(T_MARGIN, -T_MARGIN)  # interior time rows

    center = u[ti, 2:-2]
    u_t = (u[2:, 2:-2] - u[:-2, 2:-2]) / (2 * dt)
    u_tt = (u[2:, 2:-2] - 2 * center + u[:-2, 2:-2]) / dt**2
    u_x = (u[ti, 3:-1] - u[ti, 1:-3]) / (2 * dx)
    u_xx = (u[ti, 3:-1] - 2 * center + u[ti, 1:-3]) / dx**2
    u_xxx = (u[ti, 4:] - 2 * u[ti, 3:-1] + 2 * u[ti, 1:-3] - u[ti, :-4]) / (2 * dx**3)

    return DerivativeStack(grid=field.grid, factors={
        CONST: np.ones_like(center),
        U: center.copy(),
        U_T: u_t,
        U_TT: u_tt,
        U_X: u_x,
        U_XX: u_xx,
        U_XXX: u_xxx,
    })


def _savgol_axis(values: np.ndarray, window: int, degree: int, deriv: int,
                 delta: float, axis: int) -> np.ndarray:
    """Least-squares polynomial derivative along one axis.

    Interior points use the symmetric window; within half a window of the
    edges the window is clamped to the boundary and the fit evaluated at
    the point's offset inside it, so the output covers the full axis.
    """
    n = values.shape[axis]
    if window > n:
        raise ValueError(f"window {window} exceeds axis length {n}")
    work = np.moveaxis(values, axis, -1)
    half = window // 2

    kernel = savgol_coeffs(window, degree, deriv=deriv, delta=delta, use="dot")
    windows = sliding_window_view(work, window, axis=-1)
    out = np.empty_like(work)
    out[..., half:n - half] = windows @ kernel

    for p in range(half):
        left = savgol_coeffs(window, degree, deriv=deriv, delta=delta,
                             pos=p, use="dot")
        right = savgol_coeffs(window, degree, deriv=deriv, delta=delta,
                              pos=window - 1 - p, use="dot")
        out[..., p] = work[..., :window] @ left
        out[..., n - 1 - p] = work[..., n - window:] @ right

    return np.moveaxis(out, -1, axis)


def poly_derivatives(field: SolutionField, window: int = 15,
                     degree: int = 4) -> DerivativeStack:
    """Derivative stack from per-axis local polynomial fits.

    At each point a degree-``degree`` polynomial is fit by least squares
    over ``window`` samples along the axis of differentiation and its
    analytic derivative is evaluated. Smooths noise that plain finite
    differences would amplify.
    """
    if window % 2 == 0:
        raise ValueError(f"window must be odd, got {window}")
    if degree < 3:
        raise ValueError(f"degree must be >= 3 to expose u_xxx, got {degree}")
    if window < degree + 1:
        raise ValueError(
            f"window too small: need window >= degree + 1, "
            f"got window={window}, degree={degree}"
        )
    u = _check_field(field)
    dt, dx = field.grid.dt, field.grid.dx

    ti, xi = slice(T_MARGIN, -T_MARGIN), slice(X_MARGIN, -X_MARGIN)
    stack = {
        CONST: np.ones((field.grid.nt - 2, field.grid.nx - 4)),
        U: u[ti, xi].copy(),
        U_T: _savgol_axis(u, window, degree, 1, dt, axis=0)[ti, xi],
        U_TT: _savgol_axis(u, window, degree, 2, dt, axis=0)[ti, xi],
        U_X: _savgol_axis(u, window, degree, 1, dx, axis=1)[ti, xi],
        U_XX: _savgol_axis(u, window, degree, 2, dx, axis=1)[ti, xi],
        U_XXX: _savgol_axis(u, window, degree, 3, dx, axis=1)[ti, xi],
    }
    return DerivativeStack(grid=field.grid, factors=stack)
