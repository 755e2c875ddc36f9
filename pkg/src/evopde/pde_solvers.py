"""Synthetic ground-truth fields for the three validation equations.

wave:    u_tt = (1/c^2) u_xx        theta-weighted implicit scheme
burgers: u_t  = -u u_x + mu u_xx    Crank-Nicolson, Picard-iterated advection
kdv:     u_t + 6 u u_x + u_xxx = 0  Zabusky-Kruskal leapfrog, periodic

All solvers are deterministic and raise SolverDivergedError on any
non-finite value. The wave and Burgers problems use Dirichlet-zero walls;
KdV is periodic (its stability bound dt <= O(dx^3) is met by internal
substepping between stored frames).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import LinearSolveError, SolverDivergedError
from .grid_field import Grid, SolutionField, make_grid

_THETA = 0.25  # unconditionally stable, second-order implicit weighting


def _as_profile(profile, nx: int, name: str) -> np.ndarray:
    arr = np.asarray(profile, dtype=float)
    if arr.shape != (nx,):
        raise ValueError(f"{name} must have length nx={nx}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class WaveParams:
    c: float
    grid: Grid
    initial_displacement: np.ndarray
    initial_velocity: np.ndarray

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError(f"wave speed parameter must be > 0, got {self.c}")
        object.__setattr__(self, "initial_displacement",
                           _as_profile(self.initial_displacement, self.grid.nx,
                                       "initial_displacement"))
        object.__setattr__(self, "initial_velocity",
                           _as_profile(self.initial_velocity, self.grid.nx,
                                       "initial_velocity"))


@dataclass(frozen=True)
class BurgersParams:
    mu: float
    grid: Grid
    initial_profile: np.ndarray

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"viscosity must be > 0, got {self.mu}")
        object.__setattr__(self, "initial_profile",
                           _as_profile(self.initial_profile, self.grid.nx,
                                       "initial_profile"))


@dataclass(frozen=True)
class KdvParams:
    grid: Grid
    initial_profile: np.ndarray
    substeps: int | None = None  # None: choose from the stability bound

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_profile",
                           _as_profile(self.initial_profile, self.grid.nx,
                                       "initial_profile"))
        if self.substeps is not None and self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")


def _check_finite(u: np.ndarray, what: str) -> None:
    if not np.isfinite(u).all():
        raise SolverDivergedError(f"{what} solver produced non-finite values")


def _second_diff(u: np.ndarray) -> np.ndarray:
    """delta^2 with Dirichlet-zero walls, same length as u."""
    out = np.zeros_like(u)
    out[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
    return out


def solve_wave(p: WaveParams) -> SolutionField:
    """Implicit theta scheme for u_tt = (1/c^2) u_xx.

    The time-averaged spatial operator makes the step unconditionally
    stable; each frame costs one tridiagonal solve.
    """
    g = p.grid
    a2 = 1.0 / p.c**2                     # coefficient of u_xx
    r2 = a2 * g.dt**2 / g.dx**2
    n_in = g.nx - 2

    u = np.zeros((g.nt, g.nx))
    u[0] = p.initial_displacement
    u[0, 0] = u[0, -1] = 0.0

    # second-order Taylor start from displacement and velocity
    u[1] = u[0] + g.dt * p.initial_velocity \
        + 0.5 * g.dt**2 * a2 * _second_diff(u[0]) / g.dx**2
    u[1, 0] = u[1, -1] = 0.0

    # banded LHS: I - theta r^2 delta^2 on the interior unknowns
    ab = np.zeros((3, n_in))
    ab[0, 1:] = -_THETA * r2
    ab[1, :] = 1.0 + 2.0 * _THETA * r2
    ab[2, :-1] = -_THETA * r2

    for n in range(1, g.nt - 1):
        rhs = (2 * u[n] - u[n - 1]
               + r2 * ((1 - 2 * _THETA) * _second_diff(u[n])
                       + _THETA * _second_diff(u[n - 1])))
        try:
            u[n + 1, 1:-1] = solve_banded((1, 1), ab, rhs[1:-1])
        except np.linalg.LinAlgError as exc:
            raise LinearSolveError("wave step tridiagonal solve failed") from exc
    _check_finite(u, "wave")
    return SolutionField(grid=g, values=u)


def solve_burgers(p: BurgersParams, picard_iterations: int = 2) -> SolutionField:
    """Crank-Nicolson for u_t = -u u_x + mu u_xx.

    The advection coefficient in the implicit half is lagged and refreshed
    by ``picard_iterations`` fixed-point passes per step; adequate for the
    smooth validation regime.
    """
    g = p.grid
    dt, dx, mu = g.dt, g.dx, p.mu
    n_in = g.nx - 2

    u = np.zeros((g.nt, g.nx))
    u[0] = p.initial_profile
    u[0, 0] = u[0, -1] = 0.0

    for n in range(g.nt - 1):
        un = u[n]
        dun = np.zeros_like(un)
        dun[1:-1] = (un[2:] - un[:-2]) / (2 * dx)
        f_n = -un * dun + mu * _second_diff(un) / dx**2
        rhs = (un + 0.5 * dt * f_n)[1:-1]

        v = un.copy()
        for _ in range(picard_iterations):
            coeff = v[1:-1]
            ab = np.zeros((3, n_in))
            ab[0, 1:] = 0.5 * dt * (coeff[:-1] / (2 * dx) - mu / dx**2)
            ab[1, :] = 1.0 + dt * mu / dx**2
            ab[2, :-1] = 0.5 * dt * (-coeff[1:] / (2 * dx) - mu / dx**2)
            try:
                inner = solve_banded((1, 1), ab, rhs)
            except np.linalg.LinAlgError as exc:
                raise LinearSolveError("burgers step tridiagonal solve failed") from exc
            v = np.zeros_like(un)
            v[1:-1] = inner
        u[n + 1] = v
    _check_finite(u, "burgers")
    return SolutionField(grid=g, values=u)


def _kdv_rhs(u: np.ndarray, dx: float) -> np.ndarray:
    """-6 u u_x - u_xxx with the Zabusky-Kruskal three-point average on
    the advection coefficient (keeps the discrete mass exactly constant)."""
    up1, um1 = np.roll(u, -1), np.roll(u, 1)
    up2, um2 = np.roll(u, -2), np.roll(u, 2)
    avg = (up1 + u + um1) / 3.0
    nonlin = 6.0 * avg * (up1 - um1) / (2 * dx)
    disp = (up2 - 2 * up1 + 2 * um1 - um2) / (2 * dx**3)
    return -nonlin - disp


def kdv_stable_step(dx: float, u_max: float, safety: float = 0.5) -> float:
    """Linear-plus-advective stability bound of the leapfrog scheme."""
    return safety / (3.0 * math.sqrt(3.0) / 2.0 / dx**3 + 6.0 * u_max / dx)


_RA_FILTER = 0.02  # Robert-Asselin coefficient on the middle time level


def solve_kdv(p: KdvParams) -> SolutionField:
    """Zabusky-Kruskal explicit leapfrog for u_t + 6 u u_x + u_xxx = 0.

    Frames are stored every ``substeps`` internal steps so the stored grid
    step can exceed the scheme's dt <= O(dx^3) stability bound. A weak
    Robert-Asselin filter keeps the leapfrog's odd-even computational
    mode from contaminating the field over long integrations; it leaves
    the discrete mass exactly conserved (the correction it adds sums to
    zero over a period).
    """
    g = p.grid
    u0 = p.initial_profile.copy()

    if p.substeps is None:
        u_max = 1.5 * float(np.max(np.abs(u0))) + 1e-12
        substeps = max(2, math.ceil(g.dt / kdv_stable_step(g.dx, u_max)))
        substeps += substeps % 2  # store same-parity leapfrog levels only
    else:
        substeps = p.substeps
    dt = g.dt / substeps

    u = np.zeros((g.nt, g.nx))
    u[0] = u0

    prev = u0
    # midpoint start keeps the overall scheme second order
    cur = u0 + dt * _kdv_rhs(u0 + 0.5 * dt * _kdv_rhs(u0, g.dx), g.dx)
    stored = 1
    step = 1
    while stored < g.nt:
        if step % substeps == 0:
            if not np.isfinite(cur).all():
                raise SolverDivergedError(
                    f"kdv solver diverged at stored frame {stored}"
                )
            u[stored] = cur
            stored += 1
            if stored == g.nt:
                break
        nxt = prev + 2 * dt * _kdv_rhs(cur, g.dx)
        prev = cur + _RA_FILTER * (nxt - 2 * cur + prev)
        cur = nxt
        step += 1
    _check_finite(u, "kdv")
    return SolutionField(grid=g, values=u)


def soliton(x: np.ndarray, speed: float, x0: float) -> np.ndarray:
    """Single-soliton profile (speed/2) sech^2(sqrt(speed)(x-x0)/2) of the
    KdV normalization used here."""
    arg = 0.5 * math.sqrt(speed) * (x - x0)
    return 0.5 * speed / np.cosh(arg) ** 2


def periodic_soliton(x: np.ndarray, speed: float, x0: float,
                     length: float, images: int = 2) -> np.ndarray:
    """Soliton profile periodized by summing wrap-around images, so the
    initial condition is smooth across the periodic seam."""
    out = np.zeros_like(x)
    for m in range(-images, images + 1):
        out += soliton(x, speed, x0 + m * length)
    return out


# ---------------------------------------------------------------------------
# Validation setups. The grids are fixed by the benchmark protocol; the
# initial profiles are this package's defaults and can be overridden.

def wave_validation_params(c: float = 2.0, nt: int = 100, nx: int = 100,
                           dt: float = 0.1, dx: float = 0.1) -> WaveParams:
    # two superposed standing modes: wall-compatible, resolved essentially
    # exactly by the scheme (so the true relation holds to numerical
    # precision), yet with enough structure that no spurious single-mode
    # identity (u_tt ~ u, ...) survives in the data
    grid = make_grid(nt, nx, dt, dx)
    x = grid.xs()
    s = np.pi * (x - x[0]) / (x[-1] - x[0])
    profile = np.sin(s) + 0.5 * np.sin(2 * s)
    return WaveParams(c=c, grid=grid, initial_displacement=profile,
                      initial_velocity=np.zeros(nx))


def burgers_validation_params(mu: float = 0.1, nt: int = 256,
                              nx: int = 256) -> BurgersParams:
    # staggered humps of different heights over a smooth low background:
    # taller humps overtake shorter ones mid-window, so fronts never
    # settle into steady travel anywhere in the record, and the amplitude
    # histogram stays spread out (both matter for discovery on crops)
    grid = make_grid(nt, nx, 10.0 / nt, 16.0 / nx)
    x = grid.xs()

    def hump(a, center, width):
        return a * np.exp(-((x - center) ** 2) / width)

    profile = (hump(0.65, 2.4, 1.0) + hump(0.32, 4.2, 1.2)
               + hump(0.5, 8.6, 1.0) + hump(0.2, 11.0, 1.4)
               + 0.1 * np.sin(np.pi * x / 16.0) ** 2)
    return BurgersParams(mu=mu, grid=grid, initial_profile=profile)


def kdv_validation_params(nt: int = 1024, nx: int = 1024) -> KdvParams:
    # narrow solitons periodized across the seam: the profile must be
    # smooth on the periodic domain or the wrap kink radiates circulating
    # dispersive noise that never decays
    grid = make_grid(nt, nx, 1.0 / nt, 16.0 / nx)
    x = grid.xs()
    length = grid.nx * grid.dx
    profile = periodic_soliton(x, 6.0, 2.0, length) \
        + periodic_soliton(x, 2.0, 9.0, length)
    return KdvParams(grid=grid, initial_profile=profile)


VALIDATION_FACTORIES = {
    "wave": wave_validation_params,
    "burgers": burgers_validation_params,
    "kdv": kdv_validation_params,
}


def solve_validation(equation: str, **overrides) -> SolutionField:
    """Solve one of the named validation problems on its benchmark grid."""
    if equation not in VALIDATION_FACTORIES:
        raise ValueError(f"unknown equation {equation!r}; "
                         f"choose from {sorted(VALIDATION_FACTORIES)}")
    params = VALIDATION_FACTORIES[equation](**overrides)
    if equation == "wave":
        return solve_wave(params)
    if equation == "burgers":
        return solve_burgers(params)
    return solve_kdv(params)
