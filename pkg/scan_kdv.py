"""Scan KdV initial configurations for data-fraction discovery margins."""
import numpy as np
from itertools import combinations, combinations_with_replacement
import evopde
from evopde.grid_field import make_grid
from evopde.pde_solvers import KdvParams, solve_kdv, periodic_soliton
from evopde.differentiation import fd_derivatives, DEFAULT_POOL
from evopde.term_algebra import Term, evaluate_term_normalized as norm
from evopde.bench import crop_fraction
from evopde.regression import fit_coefficients
from evopde.term_algebra import term

TRUTH_SETS = [
    frozenset([Term(('u_t',)), Term(('u', 'u_x')), Term(('u_xxx',))]),
]

def landscape(st):
    singles = [Term((p,)) for p in DEFAULT_POOL]
    pairs = [Term(c) for c in combinations_with_replacement(
        [p for p in DEFAULT_POOL if p != '1'], 2)]
    terms = singles + pairs
    V = {}
    for t in terms:
        try:
            V[t] = norm(t, st)
        except Exception:
            pass
    names = list(V)
    M = np.column_stack([V[t] for t in names])
    G = M.T @ M
    ysq = np.diag(G).copy()
    best_truth, best_other = np.inf, (np.inf, None)
    n = len(names)
    for ti in range(n):
        corr = G[ti]
        for pair in combinations([j for j in range(n) if j != ti], 2):
            idx = list(pair)
            sub = G[np.ix_(idx, idx)]
            w, *_ = np.linalg.lstsq(sub, corr[idx], rcond=1e-10)
            rsq = ysq[ti] - 2 * corr[idx] @ w + w @ sub @ w
            r = np.sqrt(max(rsq, 0.0)) / np.sqrt(ysq[ti])
            struct = frozenset([names[ti], names[idx[0]], names[idx[1]]])
            if struct in TRUTH_SETS:
                best_truth = min(best_truth, r)
            elif r < best_other[0]:
                best_other = (r, (str(names[ti]), [str(names[j]) for j in idx]))
    return best_truth, best_other

def scan(name, speeds, x0s, nt=512, nx=512, fractions=(0.8, 0.6, 0.4, 0.3)):
    grid = make_grid(nt, nx, 1.0 / nt, 16.0 / nx)
    x = grid.xs(); L = nx * grid.dx
    u0 = np.zeros_like(x)
    for c, p in zip(speeds, x0s):
        u0 += periodic_soliton(x, c, p, L)
    f = solve_kdv(KdvParams(grid=grid, initial_profile=u0))
    st = fd_derivatives(f)
    eq = fit_coefficients(term('u_t'), [term('u', 'u_x'), term('u_xxx')], st)
    co = [round(c, 4) for _, c in eq.terms]
    bt, bo = landscape(st)
    print(f'{name}: coeffs={co}  full: truth={bt:.4f} other={bo[0]:.4f} {bo[1]}')
    for frac in fractions:
        sub = crop_fraction(f, frac)
        stc = fd_derivatives(sub)
        bt, bo = landscape(stc)
        flag = 'TRUTH' if bt < bo[0] else 'other'
        print(f'   f={frac}: truth={bt:.4f} other={bo[0]:.4f} [{flag}] {bo[1]}')

if __name__ == '__main__':
    import sys
    which = sys.argv[1] if len(sys.argv) > 1 else 'all'
    configs = {
        'B853': ((8, 5, 3), (1.0, 4.4, 7.5)),
        'B642': ((6, 4, 2), (1.0, 4.2, 7.0)),
        'B7542': ((7, 5, 4, 2), (1.0, 4.0, 7.0, 10.0)),
        'B864': ((8, 6, 4), (1.0, 4.6, 8.0)),
    }
    for name, (speeds, x0s) in configs.items():
        if which != 'all' and which != name:
            continue
        scan(name, speeds, x0s)
