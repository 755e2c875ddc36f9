"""Full-library sparse regression baseline.

The comparison method enumerates every candidate term up front (all
products of at most ``max_factors`` pool factors, target excluded),
regresses the normalized time derivative on the normalized library by
LASSO or thresholded ridge, and refits the surviving terms on raw data.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .differentiation import DEFAULT_POOL, DerivativeStack, fd_derivatives
from .errors import DegenerateTermError
from .grid_field import SolutionField
from .regression import DiscoveredEquation, RegressionConfig, \
    backward_eliminate, fit_coefficients, lasso, ridge
from .term_algebra import Term, evaluate_term_normalized

RIDGE_ACTIVE_THRESHOLD = 1e-3  # |w| cut on normalized features


@dataclass(frozen=True)
class TermLibrary:
    """Every candidate term in canonical order, plus the fixed target."""

    terms: tuple[Term, ...]
    target: Term

    def __len__(self) -> int:
        return len(self.terms)


def enumerate_library(pool=DEFAULT_POOL, max_factors: int = 2,
                      target: str = "u_t") -> TermLibrary:
    """All multisets of 1..max_factors factors over pool minus the target,
    ordered by size then by factor position in the pool."""
    if max_factors < 1:
        raise ValueError(f"max_factors must be >= 1, got {max_factors}")
    if target not in pool:
        raise ValueError(f"target {target!r} is not in the pool")
    rest = [f for f in pool if f != target]
    order = {f: i for i, f in enumerate(pool)}
    terms = []
    for size in range(1, max_factors + 1):
        for combo in combinations_with_replacement(rest, size):
            terms.append(Term(factors=tuple(sorted(combo, key=order.get))))
    return TermLibrary(terms=tuple(terms), target=Term(factors=(target,)))


def discover_baseline(field: SolutionField, lib: TermLibrary | None = None,
                      reg: RegressionConfig | None = None,
                      use_ridge_alpha: float | None = None,
                      stack: DerivativeStack | None = None) -> DiscoveredEquation:
    """Structure from one regression over the whole library, then raw-data
    coefficient recovery on the active set.

    Library terms whose feature vectors cannot be frame-normalized are
    dropped; if nothing usable remains (or the regression keeps nothing)
    the discovery is degenerate rather than an error.
    """
    if lib is None:
        lib = enumerate_library()
    if reg is None:
        reg = RegressionConfig()
    if stack is None:
        stack = fd_derivatives(field)

    try:
        target_vec = evaluate_term_normalized(lib.target, stack)
    except DegenerateTermError:
        return DiscoveredEquation(target=lib.target, terms=(),
                                  residual_norm=np.inf)
    columns, kept = [], []
    seen: set[tuple] = set()
    for t in lib.terms:
        # constant factors multiply to the same feature vector; keep one
        # column per distinct product so the final refit stays full rank
        stripped = tuple(f for f in t.factors if f != "1") or ("1",)
        if stripped in seen:
            continue
        try:
            columns.append(evaluate_term_normalized(t, stack))
            kept.append(t)
            seen.add(stripped)
        except DegenerateTermError:
            continue
    if not columns:
        return DiscoveredEquation(target=lib.target, terms=(),
                                  residual_norm=np.inf)

    if use_ridge_alpha is None:
        sol = lasso(columns, target_vec, reg)
        selected = list(sol.active_set)
    else:
        w = ridge(columns, target_vec, use_ridge_alpha)
        selected = list(np.flatnonzero(np.abs(w) > RIDGE_ACTIVE_THRESHOLD))
    S = np.column_stack(columns)
    selected = backward_eliminate(S.T @ S, S.T @ target_vec,
                                  float(target_vec @ target_vec), selected)
    active = [kept[i] for i in selected]
    if not active:
        return DiscoveredEquation(target=lib.target, terms=(),
                                  residual_norm=np.inf)
    return fit_coefficients(lib.target, active, stack)
