"""Sparse structure selection and coefficient recovery.

Structure is selected on frame-normalized features by LASSO, minimizing

    Q(w) = 1/2 ||S w - y||^2 + lambda ||w||_1

by cyclic coordinate descent with soft thresholding (the all-zero solution
is optimal exactly when lambda >= max_j |S_j . y|). A ridge variant backs
the full-library baseline. Once a structure is fixed, physical-scale
coefficients come from ordinary least squares on the raw, non-normalized
feature vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .differentiation import DerivativeStack
from .errors import RankDeficientError, SingularSystemError
from .term_algebra import Term, evaluate_term_raw, render_term


@dataclass(frozen=True)
class RegressionConfig:
    """Knobs of the sparse structure regression."""

    lam: float = 1e-4            # L1 sparsity constant on normalized features
    max_iterations: int = 10_000
    tolerance: float = 1e-12     # max weight change per sweep, relative
    zero_threshold: float = 1e-2 # |w| at or below this is reported inactive
                                 # (features are frame-normalized, so true
                                 # structural weights sit well above this)

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")


@dataclass
class SparseSolution:
    """LASSO output: weights aligned with the feature columns."""

    weights: np.ndarray
    residual_norm: float
    active_set: np.ndarray       # indices with |w| above the zero threshold
    converged: bool
    n_sweeps: int
    objective_trace: list[float] = field(default_factory=list)

    def thresholded_weights(self) -> np.ndarray:
        out = self.weights.copy()
        mask = np.ones(len(out), dtype=bool)
        mask[self.active_set] = False
        out[mask] = 0.0
        return out


def lasso_objective(S: np.ndarray, y: np.ndarray, w: np.ndarray,
                    lam: float) -> float:
    """The objective minimized by :func:`lasso`."""
    r = S @ w - y
    return float(0.5 * r @ r + lam * np.sum(np.abs(w)))


def _soft(x: float, thresh: float) -> float:
    if x > thresh:
        return x - thresh
    if x < -thresh:
        return x + thresh
    return 0.0


def _kkt_candidate(gram: np.ndarray, corr: np.ndarray, lam: float,
                   w: np.ndarray) -> np.ndarray | None:
    """Exact minimizer attempt seeded by the sign pattern of ``w``.

    Active-set iteration: solve the stationarity system on the tentative
    support; drop coordinates whose refit weight flips sign; admit the
    worst off-support violator of |gradient| <= lam with the sign the
    gradient dictates. Returns the exact minimizer once the optimality
    conditions hold, or None if the exchange loop fails to close (the
    caller's coordinate descent then continues as fallback).
    """
    p = len(corr)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(corr)) if p else 0.0), lam)
    support = list(np.flatnonzero(w != 0.0))
    signs = [float(s) for s in np.sign(w[support])] if support else []
    for _ in range(4 * p + 4):
        if support:
            idx = np.asarray(support)
            sub = gram[np.ix_(idx, idx)]
            rhs = corr[idx] - lam * np.asarray(signs)
            # truncated solve: collinear supports get the benign
            # minimum-norm split instead of an exploding exact solution
            sol, *_ = np.linalg.lstsq(sub, rhs, rcond=1e-12)
            flipped = np.flatnonzero(sol * np.asarray(signs) < 0.0)
            if len(flipped):
                for k in sorted(flipped, reverse=True):
                    del support[k], signs[k]
                continue
        cand = np.zeros_like(w)
        if support:
            cand[idx] = sol
        grad = gram @ cand - corr
        nonzero = cand != 0.0
        if np.any(np.abs(grad[nonzero] + lam * np.sign(cand[nonzero])) > tol):
            return None  # support is degenerate beyond the solve precision
        violation = np.abs(grad) - lam
        violation[nonzero] = -np.inf
        violation[support] = -np.inf  # zero-weight support members stay
        worst = int(np.argmax(violation)) if p else 0
        if p == 0 or violation[worst] <= tol:
            return cand
        support.append(worst)
        signs.append(-float(np.sign(grad[worst])))
    return None


def lasso_gram(gram: np.ndarray, corr: np.ndarray, y_sq: float,
               cfg: RegressionConfig) -> SparseSolution:
    """Coordinate descent on the Gram form of the LASSO problem.

    ``gram = S^T S``, ``corr = S^T y``, ``y_sq = y . y``. This is the one
    numeric path used everywhere so that results are identical whether a
    caller supplies columns or precomputed products. Each sweep is
    followed by an exact solve on the current sign pattern, which
    terminates as soon as the pattern is optimal (plain descent can crawl
    when columns are nearly collinear).
    """
    p = len(corr)
    w = np.zeros(p)
    diag = np.diag(gram).copy()

    def objective(wv):
        quad = 0.5 * (wv @ gram @ wv - 2.0 * corr @ wv + y_sq)
        return quad + cfg.lam * np.sum(np.abs(wv))

    trace = [objective(w)]
    converged = False
    sweeps = 0
    candidate = _kkt_candidate(gram, corr, cfg.lam, w)
    if candidate is not None:
        w = candidate
        converged = True
        trace.append(objective(w))
    gw = gram @ w
    while not converged and sweeps < cfg.max_iterations:
        sweeps += 1
        max_delta = 0.0
        max_w = np.max(np.abs(w)) if p else 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                continue  # identically zero column
            rho = corr[j] - gw[j] + diag[j] * w[j]
            new_wj = _soft(rho, cfg.lam) / diag[j]
            delta = new_wj - w[j]
            if delta != 0.0:
                gw += gram[:, j] * delta
                w[j] = new_wj
                max_delta = max(max_delta, abs(delta))
                max_w = max(max_w, abs(new_wj))
        candidate = _kkt_candidate(gram, corr, cfg.lam, w)
        if candidate is not None:
            w = candidate
            gw = gram @ w
            converged = True
        obj = objective(w)
        # descent is exact in exact arithmetic; tolerate fp wobble only
        if obj > trace[-1] + 1e-10 * (1.0 + abs(trace[-1])):
            raise AssertionError(
                f"lasso objective increased: {trace[-1]} -> {obj}"
            )
        trace.append(obj)
        if converged:
            break
        if max_delta <= cfg.tolerance * max(max_w, 1.0):
            converged = True
            break

    resid_sq = w @ gram @ w - 2.0 * corr @ w + y_sq
    residual = float(np.sqrt(max(resid_sq, 0.0)))
    active = np.flatnonzero(np.abs(w) > cfg.zero_threshold)
    return SparseSolution(weights=w, residual_norm=residual,
                          active_set=active, converged=converged,
                          n_sweeps=sweeps, objective_trace=trace)


def gram_residual(gram: np.ndarray, corr: np.ndarray, y_sq: float,
                  support) -> float:
    """Unpenalized least-squares residual norm on a coordinate subset,
    from Gram products alone."""
    support = list(support)
    if not support:
        return float(np.sqrt(max(y_sq, 0.0)))
    sub = gram[np.ix_(support, support)]
    rhs = corr[support]
    w, *_ = np.linalg.lstsq(sub, rhs, rcond=1e-10)
    resid_sq = y_sq - 2.0 * rhs @ w + w @ sub @ w
    return float(np.sqrt(max(resid_sq, 0.0)))


def backward_eliminate(gram: np.ndarray, corr: np.ndarray, y_sq: float,
                       active, min_improvement: float = 0.5,
                       floor: float = 0.0) -> list[int]:
    """Trim an active set by backward elimination.

    A term survives only if removing it worsens the least-squares residual
    by more than ``min_improvement`` relative (and past ``floor``, below
    which fits count as exact). Scale-free, so informative-but-redundant
    extras are dropped where no single L1 weight threshold could separate
    them from genuinely structural terms.
    """
    active = list(active)
    r_cur = gram_residual(gram, corr, y_sq, active)
    while len(active) > 1:
        best_j, best_r = None, np.inf
        for j in active:
            rest = [k for k in active if k != j]
            r_j = gram_residual(gram, corr, y_sq, rest)
            if r_j < best_r:
                best_j, best_r = j, r_j
        if best_r <= max((1.0 + min_improvement) * r_cur, floor):
            active.remove(best_j)
            r_cur = best_r
        else:
            break
    return active


def lasso(S, y: np.ndarray, cfg: RegressionConfig) -> SparseSolution:
    """LASSO on explicit feature columns (matrix or list of vectors)."""
    S = np.column_stack(S) if isinstance(S, (list, tuple)) else np.asarray(S, float)
    y = np.asarray(y, dtype=float)
    if S.ndim != 2 or S.shape[1] == 0:
        raise ValueError("feature matrix must have at least one column")
    if S.shape[0] != y.shape[0]:
        raise ValueError(
            f"feature rows {S.shape[0]} do not match target length {y.shape[0]}"
        )
    sol = lasso_gram(S.T @ S, S.T @ y, float(y @ y), cfg)
    # recompute the residual from the columns: the Gram identity cancels
    # catastrophically for near-exact fits
    sol.residual_norm = float(np.linalg.norm(S @ sol.weights - y))
    return sol


def ridge(S, y: np.ndarray, alpha: float) -> np.ndarray:
    """Solve (S^T S + alpha I) w = S^T y."""
    S = np.column_stack(S) if isinstance(S, (list, tuple)) else np.asarray(S, float)
    y = np.asarray(y, dtype=float)
    gram = S.T @ S + alpha * np.eye(S.shape[1])
    try:
        return np.linalg.solve(gram, S.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"ridge system singular at alpha={alpha}"
        ) from exc


@dataclass(frozen=True)
class DiscoveredEquation:
    """A discovered relation: target term = sum of weighted active terms."""

    target: Term
    terms: tuple[tuple[Term, float], ...]
    residual_norm: float
    fitness: float | None = None
    provenance: dict | None = None

    @property
    def is_degenerate(self) -> bool:
        return len(self.terms) == 0

    @property
    def structure(self) -> frozenset[Term]:
        """All terms of the relation, target included."""
        return frozenset([self.target, *(t for t, _ in self.terms)])

    def coefficient_of(self, t: Term) -> float:
        """Weight of an active term; 0 if absent, 1 for the target itself."""
        if t == self.target:
            return 1.0
        for other, w in self.terms:
            if other == t:
                return w
        return 0.0

    def render(self) -> str:
        if self.is_degenerate:
            return f"{render_term(self.target)} = 0 (degenerate)"
        parts = []
        for i, (t, w) in enumerate(self.terms):
            mag = f"{abs(w):.4g} * {render_term(t)}"
            if i == 0:
                parts.append(f"-{mag}" if w < 0 else mag)
            else:
                parts.append(f"{'-' if w < 0 else '+'} {mag}")
        return f"{render_term(self.target)} = " + " ".join(parts)


def fit_coefficients(target: Term, features: list[Term],
                     stack: DerivativeStack) -> DiscoveredEquation:
    """Physical-scale coefficients: OLS of the raw target vector on the
    raw feature vectors of the surviving terms."""
    if len(features) == 0:
        raise ValueError("no feature terms to fit")
    y = evaluate_term_raw(target, stack)
    F = np.column_stack([evaluate_term_raw(t, stack) for t in features])
    coef, _, rank, _ = np.linalg.lstsq(F, y, rcond=None)
    if rank < F.shape[1]:
        raise RankDeficientError(
            f"coefficient system rank {rank} < {F.shape[1]} features"
        )
    residual = float(np.linalg.norm(F @ coef - y))
    return DiscoveredEquation(
        target=target,
        terms=tuple((t, float(c)) for t, c in zip(features, coef)),
        residual_norm=residual,
    )
