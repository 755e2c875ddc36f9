"""Terms (multisets of derivative factors), their feature vectors and
frame normalization.

A term names one candidate feature of the equation: the pointwise product
of its factor matrices, flattened time-major. Before structure regression
each time frame of the product is divided by its L2 norm so that frames
of very different magnitude contribute equally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .differentiation import CONST, DerivativeStack
from .errors import DegenerateTermError

RENDER_NAMES = {
    "1": "1",
    "u": "u",
    "u_t": "du/dt",
    "u_tt": "d2u/dt2",
    "u_x": "du/dx",
    "u_xx": "d2u/dx2",
    "u_xxx": "d3u/dx3",
}


@dataclass(frozen=True)
class Term:
    """Sorted multiset of factor names; equality is structural."""

    factors: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.factors) == 0:
            raise ValueError("a term needs at least one factor")
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    def __str__(self) -> str:
        return render_term(self)


def term(*factors: str) -> Term:
    """Shorthand constructor: ``term('u', 'u_x')``."""
    return Term(factors=tuple(factors))


def render_term(t: Term) -> str:
    """Human-readable product, e.g. ``u*du/dx``; the constant term is ``1``."""
    return "*".join(RENDER_NAMES.get(f, f) for f in t.factors)


def evaluate_term_raw(t: Term, stack: DerivativeStack) -> np.ndarray:
    """Pointwise product of the term's factor matrices, flattened
    time-major. No normalization."""
    for f in t.factors:
        if f not in stack:
            raise KeyError(f"unknown factor {f!r} in term {t}")
    prod = stack[t.factors[0]].copy()
    for f in t.factors[1:]:
        prod *= stack[f]
    return prod.ravel()


def normalize_frames(raw: np.ndarray, interior_shape: tuple[int, int]) -> np.ndarray:
    """Divide each time frame (contiguous slice of space points) by its
    L2 norm. A zero or non-finite frame marks the term degenerate."""
    frames = np.asarray(raw, dtype=float).reshape(interior_shape)
    norms = np.linalg.norm(frames, axis=1, keepdims=True)
    if np.any(norms == 0.0) or not np.isfinite(norms).all():
        raise DegenerateTermError(
            "feature vector has a zero or non-finite time frame"
        )
    return (frames / norms).ravel()


def evaluate_term_normalized(t: Term, stack: DerivativeStack) -> np.ndarray:
    """Raw product followed by frame normalization."""
    return normalize_frames(evaluate_term_raw(t, stack), stack.interior_shape)


def normalize_frames_max(raw: np.ndarray, interior_shape: tuple[int, int]) -> np.ndarray:
    """Alternative normalization by each frame's max absolute value."""
    frames = np.asarray(raw, dtype=float).reshape(interior_shape)
    norms = np.max(np.abs(frames), axis=1, keepdims=True)
    if np.any(norms == 0.0) or not np.isfinite(norms).all():
        raise DegenerateTermError(
            "feature vector has a zero or non-finite time frame"
        )
    return (frames / norms).ravel()


@dataclass
class FeatureMatrix:
    """Normalized feature columns for one candidate equation, with the
    designated target separated out."""

    columns: list[np.ndarray]
    target: np.ndarray
    column_terms: list[Term]
    target_term: Term

    def matrix(self) -> np.ndarray:
        return np.column_stack(self.columns)


def build_feature_matrix(chromosome, stack: DerivativeStack) -> FeatureMatrix:
    """Normalized vectors for every term of a chromosome, target split off;
    column order follows the chromosome's gene order."""
    terms = list(chromosome.terms)
    if len(set(terms)) != len(terms):
        raise ValueError("chromosome terms must be distinct")
    if not 0 <= chromosome.target_index < len(terms):
        raise ValueError(
            f"target index {chromosome.target_index} out of range "
            f"for {len(terms)} terms"
        )
    columns, column_terms = [], []
    target_vec = None
    for i, t in enumerate(terms):
        vec = evaluate_term_normalized(t, stack)
        if i == chromosome.target_index:
            target_vec = vec
        else:
            columns.append(vec)
            column_terms.append(t)
    return FeatureMatrix(columns=columns, target=target_vec,
                         column_terms=column_terms,
                         target_term=terms[chromosome.target_index])


def random_term(pool: tuple[str, ...], max_factors: int,
                rng: np.random.Generator) -> Term:
    """Uniform factor count in 1..max_factors, factors sampled uniformly
    with replacement, then canonicalized.

    The constant factor only ever appears as the standalone term: products
    draw from the non-constant part of the pool (multiplying by ones adds
    nothing and would alias the single-factor term)."""
    if len(pool) == 0:
        raise ValueError("factor pool is empty")
    if max_factors < 1:
        raise ValueError(f"max_factors must be >= 1, got {max_factors}")
    count = int(rng.integers(1, max_factors + 1))
    source = pool
    if count > 1:
        source = tuple(f for f in pool if f != CONST) or pool
    picks = rng.integers(0, len(source), size=count)
    return Term(factors=tuple(source[i] for i in picks))


def common_factors(terms) -> tuple[str, ...]:
    """Multiset intersection of the factor lists of all given terms."""
    terms = list(terms)
    if not terms:
        return ()
    shared = list(terms[0].factors)
    for t in terms[1:]:
        remaining = list(t.factors)
        kept = []
        for f in shared:
            if f in remaining:
                remaining.remove(f)
                kept.append(f)
        shared = kept
        if not shared:
            break
    return tuple(shared)


def divide_term(t: Term, factors: tuple[str, ...]) -> Term:
    """Remove one copy of each given factor; an emptied term becomes the
    constant term."""
    remaining = list(t.factors)
    for f in factors:
        remaining.remove(f)
    return Term(factors=tuple(remaining) or (CONST,))


def is_degenerate(t: Term, stack: DerivativeStack) -> bool:
    """Whether the term's product vector has a zero frame (so its
    normalization is undefined). The constant term never is."""
    if all(f == CONST for f in t.factors):
        return False
    raw = evaluate_term_raw(t, stack).reshape(stack.interior_shape)
    norms = np.linalg.norm(raw, axis=1)
    return bool(np.any(norms == 0.0) or not np.isfinite(norms).all())
