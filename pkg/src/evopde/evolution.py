"""Evolutionary search over candidate term sets.

Each individual is a chromosome: a fixed number of distinct terms plus a
randomly designated target term. Per epoch every individual is scored by
LASSO on its normalized feature matrix (fitness is the inverse residual
norm), tournament-selected parents breed by gene-wise crossover, offspring
replace the least fit, and every non-elite individual mutates. The best
surviving structure finally gets physical coefficients by OLS on raw
features.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .differentiation import DEFAULT_POOL, DerivativeStack, fd_derivatives, \
    poly_derivatives
from .errors import DegenerateTermError, PoolExhaustedError
from .grid_field import SolutionField
from .regression import DiscoveredEquation, RegressionConfig, SparseSolution, \
    backward_eliminate, fit_coefficients, lasso_gram
from .term_algebra import Term, common_factors, divide_term, \
    evaluate_term_normalized, is_degenerate, random_term, render_term

_MAX_DRAWS = 1000  # attempts to find a fresh viable term before giving up


@dataclass
class Chromosome:
    """One candidate equation: distinct term genes plus a target index."""

    terms: list[Term]
    target_index: int
    fitness: float | None = None
    solution: SparseSolution | None = None

    def __post_init__(self) -> None:
        if len(self.terms) < 2:
            raise ValueError("a chromosome needs at least two terms")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError(f"chromosome terms must be distinct: {self.terms}")
        if not 0 <= self.target_index < len(self.terms):
            raise ValueError(
                f"target index {self.target_index} out of range"
            )

    @property
    def target_term(self) -> Term:
        return self.terms[self.target_index]

    def feature_terms(self) -> list[Term]:
        """Non-target terms in gene order (the feature-matrix columns)."""
        return [t for i, t in enumerate(self.terms) if i != self.target_index]

    def active_terms(self) -> list[Term]:
        if self.solution is None:
            raise ValueError("chromosome has not been evaluated")
        cols = self.feature_terms()
        return [cols[i] for i in self.solution.active_set]

    def structure_complexity(self) -> int:
        """Total factor count of the selected relation (target plus
        active terms); used only to break exact fitness ties."""
        if self.solution is None:
            return np.iinfo(np.int32).max
        return len(self.target_term.factors) + sum(
            len(t.factors) for t in self.active_terms())

    def invalidate(self) -> None:
        self.fitness = None
        self.solution = None


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 16
    terms_in_individual: int = 6
    epochs: int = 100
    tournament_size: int = 3
    crossover_fraction: float = 0.5
    mutation_rate: float = 0.3
    elite_count: int = 1
    seed: int = 0
    max_factors: int = 2
    pool: tuple[str, ...] = DEFAULT_POOL
    plateau_window: int = 25
    plateau_threshold: float = 1e-6
    epsilon_fitness: float = 1e-9
    # relations fitting better than this relative residual hold exactly
    # for structure purposes; they all reach the epsilon_fitness cap and
    # tie, so the parsimony tie-break can prefer the simplest form
    exactness_tol: float = 2e-4
    regression: RegressionConfig = field(default_factory=RegressionConfig)

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must be in 1..population_size")
        for name in ("crossover_fraction", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.terms_in_individual < 2:
            raise ValueError("terms_in_individual must be >= 2")
        if self.elite_count < 0:
            raise ValueError("elite_count must be >= 0")


class EvalContext:
    """Caches normalized term vectors, their pairwise dot products and
    degeneracy flags for one derivative stack, so repeated fitness
    evaluations cost a tiny Gram-system solve."""

    def __init__(self, stack: DerivativeStack, reg_cfg: RegressionConfig,
                 epsilon_fitness: float = 1e-9, exactness_tol: float = 2e-4):
        self.stack = stack
        self.reg_cfg = reg_cfg
        self.epsilon_fitness = epsilon_fitness
        self.exactness_tol = exactness_tol
        self._vectors: dict[Term, np.ndarray] = {}
        self._degenerate: dict[Term, bool] = {}
        self._dots: dict[tuple, float] = {}
        self._scores: dict[tuple, tuple[float, SparseSolution]] = {}

    def normalized(self, t: Term) -> np.ndarray:
        vec = self._vectors.get(t)
        if vec is None:
            vec = evaluate_term_normalized(t, self.stack)
            self._vectors[t] = vec
        return vec

    def degenerate(self, t: Term) -> bool:
        flag = self._degenerate.get(t)
        if flag is None:
            flag = is_degenerate(t, self.stack)
            self._degenerate[t] = flag
        return flag

    def dot(self, a: Term, b: Term) -> float:
        key = (a.factors, b.factors) if a.factors <= b.factors \
            else (b.factors, a.factors)
        val = self._dots.get(key)
        if val is None:
            val = float(self.normalized(a) @ self.normalized(b))
            self._dots[key] = val
        return val

    def evaluate(self, ch: Chromosome) -> float:
        """Score a chromosome: LASSO selects the active terms, then the
        fitness residual is the unpenalized least-squares misfit of the
        target on that selection (the L1 shrinkage would otherwise floor
        the residual and exact structures could never reach the cap).
        Residuals at or below epsilon count as exact, so equivalent exact
        structures tie at precisely 1/epsilon."""
        key = (tuple(t.factors for t in ch.terms), ch.target_index)
        hit = self._scores.get(key)
        if hit is not None:
            ch.fitness, ch.solution = hit
            return ch.fitness
        cols = ch.feature_terms()
        target = ch.target_term
        p = len(cols)
        gram = np.empty((p, p))
        for i in range(p):
            gram[i, i] = self.dot(cols[i], cols[i])
            for j in range(i + 1, p):
                gram[i, j] = gram[j, i] = self.dot(cols[i], cols[j])
        corr = np.array([self.dot(c, target) for c in cols])
        y_sq = self.dot(target, target)
        sol = lasso_gram(gram, corr, y_sq, self.reg_cfg)

        floor = self.exactness_tol * float(np.sqrt(y_sq))
        active = np.asarray(backward_eliminate(
            gram, corr, y_sq, sol.active_set, floor=floor), dtype=int)
        sol.active_set = active
        resid = self.normalized(target).copy()
        if len(active):
            sub = gram[np.ix_(active, active)]
            rhs = corr[active]
            # truncated solve: near-collinear selections must not blow up
            # the refit weights, or roundoff masks an exact residual
            w_fit, *_ = np.linalg.lstsq(sub, rhs, rcond=1e-10)
            for j, wj in zip(active, w_fit):
                resid -= wj * self.normalized(cols[j])
        # direct norm: the Gram identity loses precision on exact fits
        r = float(np.linalg.norm(resid))
        if r <= self.exactness_tol * np.sqrt(y_sq):
            r = 0.0  # numerically exact: tie at the fitness cap
        sol.residual_norm = r
        ch.solution = sol
        ch.fitness = 1.0 / (r + self.epsilon_fitness)
        self._scores[key] = (ch.fitness, sol)
        return ch.fitness


def evaluate_fitness(ch: Chromosome, stack: DerivativeStack,
                     reg_cfg: RegressionConfig,
                     epsilon_fitness: float = 1e-9,
                     exactness_tol: float = 2e-4,
                     ctx: EvalContext | None = None) -> float:
    """Public fitness evaluation; the optional context carries caches."""
    if ctx is None:
        ctx = EvalContext(stack, reg_cfg, epsilon_fitness, exactness_tol)
    return ctx.evaluate(ch)


def _draw_viable_term(pool, max_factors: int, rng: np.random.Generator,
                      ctx: EvalContext, forbidden: set[Term]) -> Term:
    for _ in range(_MAX_DRAWS):
        cand = random_term(pool, max_factors, rng)
        if cand in forbidden or ctx.degenerate(cand):
            continue
        return cand
    raise PoolExhaustedError(
        f"could not draw a fresh viable term after {_MAX_DRAWS} attempts "
        f"(pool={pool}, max_factors={max_factors})"
    )


def init_population(cfg: EvolutionConfig, pool, stack: DerivativeStack,
                    rng: np.random.Generator,
                    ctx: EvalContext | None = None) -> list[Chromosome]:
    """Random chromosomes of distinct viable terms, uniform target each."""
    if ctx is None:
        ctx = EvalContext(stack, cfg.regression, cfg.epsilon_fitness,
                          cfg.exactness_tol)
    population = []
    for _ in range(cfg.population_size):
        genes: list[Term] = []
        taken: set[Term] = set()
        while len(genes) < cfg.terms_in_individual:
            t = _draw_viable_term(pool, cfg.max_factors, rng, ctx, taken)
            genes.append(t)
            taken.add(t)
        target = int(rng.integers(cfg.terms_in_individual))
        population.append(Chromosome(terms=genes, target_index=target))
    return population


def tournament_select(population: list[Chromosome], k: int,
                      rng: np.random.Generator) -> Chromosome:
    """Best of k distinct uniform draws; ties go to the lower index."""
    if not 1 <= k <= len(population):
        raise ValueError(f"tournament size {k} out of range")
    picks = sorted(rng.choice(len(population), size=k, replace=False))
    best = picks[0]
    for idx in picks[1:]:
        fi = population[idx].fitness
        fb = population[best].fitness
        if fi is None or fb is None:
            raise ValueError("tournament requires evaluated individuals")
        if fi > fb:
            best = idx
    return population[best]


def crossover(a: Chromosome, b: Chromosome,
              rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Gene-wise exchange: each position swaps with probability 1/2 unless
    the swap would duplicate a term within an offspring. Offspring targets
    are re-drawn uniformly."""
    if len(a.terms) != len(b.terms):
        raise ValueError("crossover requires equal term counts")
    n = len(a.terms)
    ca, cb = list(a.terms), list(b.terms)
    set_a, set_b = set(ca), set(cb)
    flips = rng.random(n) < 0.5
    for i in range(n):
        if not flips[i]:
            continue
        ta, tb = ca[i], cb[i]
        if ta == tb:
            continue
        if (tb in set_a) or (ta in set_b):
            continue  # would duplicate a gene in an offspring
        ca[i], cb[i] = tb, ta
        set_a.remove(ta); set_a.add(tb)
        set_b.remove(tb); set_b.add(ta)
    t1 = int(rng.integers(n))
    t2 = int(rng.integers(n))
    return (Chromosome(terms=ca, target_index=t1),
            Chromosome(terms=cb, target_index=t2))


def mutate(ch: Chromosome, rate: float, pool, max_factors: int,
           rng: np.random.Generator, stack: DerivativeStack,
           ctx: EvalContext | None = None,
           reg_cfg: RegressionConfig | None = None) -> Chromosome:
    """Each gene is independently replaced with probability ``rate`` by a
    fresh random term (never a duplicate, never degenerate). The target
    index survives unless its gene mutated, in which case it is re-drawn."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {rate}")
    if ctx is None:
        ctx = EvalContext(stack, reg_cfg or RegressionConfig())
    genes = list(ch.terms)
    flips = rng.random(len(genes)) < rate
    mutated_any = False
    target_hit = False
    for i in range(len(genes)):
        if not flips[i]:
            continue
        forbidden = set(genes)
        genes[i] = _draw_viable_term(pool, max_factors, rng, ctx, forbidden)
        mutated_any = True
        if i == ch.target_index:
            target_hit = True
    if not mutated_any:
        return ch
    target = int(rng.integers(len(genes))) if target_hit else ch.target_index
    return Chromosome(terms=genes, target_index=target)


def _rank_indices(population: list[Chromosome]) -> list[int]:
    """Indices ordered best-first; unevaluated count as worst. Exact
    fitness ties (capped exact fits of equivalent relations) go to the
    structurally simplest individual, then to the lower index."""
    def key(i):
        f = population[i].fitness
        return (-(f if f is not None else -np.inf),
                population[i].structure_complexity(), i)
    return sorted(range(len(population)), key=key)


def run_epde(field: SolutionField, cfg: EvolutionConfig,
             derivative_method: str = "fd",
             poly_window: int = 15, poly_degree: int = 4,
             verbose: bool = False,
             stack: DerivativeStack | None = None) -> DiscoveredEquation:
    """Full discovery pipeline on one solution field.

    Differentiates, evolves the population under the configuration and
    returns the best individual's surviving terms with physical-scale
    coefficients. Fully deterministic for a fixed (field, cfg, seed).
    """
    if stack is None:
        if derivative_method == "fd":
            stack = fd_derivatives(field)
        elif derivative_method == "poly":
            stack = poly_derivatives(field, window=poly_window,
                                     degree=poly_degree)
        else:
            raise ValueError(
                f"unknown derivative method {derivative_method!r}"
            )

    ctx = EvalContext(stack, cfg.regression, cfg.epsilon_fitness,
                      cfg.exactness_tol)
    rng = np.random.default_rng(cfg.seed)
    population = init_population(cfg, cfg.pool, stack, rng, ctx)
    for ch in population:
        ctx.evaluate(ch)

    history: list[float] = []
    epochs_run = 0
    for epoch in range(1, cfg.epochs + 1):
        epochs_run = epoch

        # breed: tournament parents, gene-wise crossover
        n_offspring = int(round(cfg.crossover_fraction * cfg.population_size))
        n_offspring = min(n_offspring, cfg.population_size - cfg.elite_count)
        offspring: list[Chromosome] = []
        while len(offspring) < n_offspring:
            p1 = tournament_select(population, cfg.tournament_size, rng)
            p2 = tournament_select(population, cfg.tournament_size, rng)
            c1, c2 = crossover(p1, p2, rng)
            offspring.append(c1)
            if len(offspring) < n_offspring:
                offspring.append(c2)

        # offspring replace the least fit, in place
        ranked = _rank_indices(population)
        losers = sorted(ranked[cfg.population_size - n_offspring:])
        for idx, child in zip(losers, offspring):
            population[idx] = child

        # mutate everything except the evaluated elite
        elite = {i for i in _rank_indices(population)[:cfg.elite_count]
                 if population[i].fitness is not None}
        for i in range(cfg.population_size):
            if i in elite:
                continue
            population[i] = mutate(population[i], cfg.mutation_rate,
                                   cfg.pool, cfg.max_factors, rng,
                                   stack, ctx)

        for ch in population:
            if ch.fitness is None:
                ctx.evaluate(ch)
            assert len(set(ch.terms)) == len(ch.terms), \
                "chromosome gene distinctness violated"
        assert len(population) == cfg.population_size, \
            "population size changed"

        best = max(ch.fitness for ch in population)
        history.append(best)
        if verbose:
            leader = population[_rank_indices(population)[0]]
            print(f"epoch {epoch:4d}  best_fitness {best:.6e}  "
                  f"target {render_term(leader.target_term)}",
                  file=sys.stderr)

        if len(history) > cfg.plateau_window:
            then = history[-1 - cfg.plateau_window]
            gain = (history[-1] - then) / max(abs(then), 1e-300)
            if gain < cfg.plateau_threshold:
                break

    winner = population[_rank_indices(population)[0]]
    provenance = {
        "seed": cfg.seed,
        "epochs_run": epochs_run,
        "derivative_method": derivative_method,
        "config": repr(cfg),
        "fitness_history": tuple(history),
    }

    active = winner.active_terms()
    if len(active) == 0:
        return DiscoveredEquation(
            target=winner.target_term, terms=(), residual_norm=np.inf,
            fitness=winner.fitness, provenance=provenance,
        )
    target, active = _cancel_common_factors(winner.target_term, active)
    eq = fit_coefficients(target, active, stack)
    return replace(eq, fitness=winner.fitness, provenance=provenance)


def _cancel_common_factors(target: Term,
                           active: list[Term]) -> tuple[Term, list[Term]]:
    """Divide a factor multiset shared by every term of the relation out
    of the reported equation: target*g = sum w_i (term_i*g) holds exactly
    when target = sum w_i term_i does, and the reduced form is the
    canonical one (the search may land on either)."""
    shared = tuple(f for f in common_factors([target, *active]) if f != "1")
    if not shared:
        return target, active
    reduced = [divide_term(t, shared) for t in [target, *active]]
    if len(set(reduced)) != len(reduced):
        return target, active  # cancellation would merge two terms
    return reduced[0], reduced[1:]
