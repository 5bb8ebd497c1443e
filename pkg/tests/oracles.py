"""Independent reference computations used by the tests.

Everything here is written with explicit loops or a plain LP so that it
shares no code path with the package it checks.
"""
import itertools
import math

import numpy as np
from scipy.optimize import linprog


def H(p):
    """Entropy in bits of any nonnegative array summing to 1."""
    return -math.fsum(float(v) * math.log2(float(v)) for v in np.ravel(p) if v > 0)


def marginal(p, keep):
    drop = tuple(i for i in range(p.ndim) if i not in keep)
    return p.sum(axis=drop)


def cond_entropy(p, target, given):
    return H(marginal(p, sorted(set(target) | set(given)))) - H(marginal(p, sorted(given)))


def cmi(p, a, b, given=()):
    g = list(given)
    return (H(marginal(p, sorted(set(a) | set(g)))) + H(marginal(p, sorted(set(b) | set(g))))
            - H(marginal(p, sorted(set(a) | set(b) | set(g)))) - H(marginal(p, sorted(g))))


def bsc_ceo_posterior_entropy(alpha):
    """H(X|Y1,Y2) for X ~ Bern(1/2) seen through two BSC(alpha), by Bayes' rule."""
    total = 0.0
    for y1, y2 in itertools.product((0, 1), repeat=2):
        lik = []
        for x in (0, 1):
            l = 0.5
            for y in (y1, y2):
                l *= (1 - alpha) if y == x else alpha
            lik.append(l)
        py = sum(lik)
        for l in lik:
            if l > 0:
                total -= l * math.log2(l / py)
    return total


def bsc_ceo_information(alpha):
    """I(X;Y1,Y2) = 1 - H(X|Y1,Y2) for a uniform bit."""
    return 1.0 - bsc_ceo_posterior_entropy(alpha)


def extend(base, q, channels, observed_axes):
    """p(q, base, u1..um) by looping over every cell."""
    nq = len(q)
    usz = [w.shape[2] for w in channels]
    out = np.zeros((nq,) + base.shape + tuple(usz))
    for qi in range(nq):
        for idx in np.ndindex(base.shape):
            if base[idx] == 0:
                continue
            for us in itertools.product(*[range(n) for n in usz]):
                v = q[qi] * base[idx]
                for w, ax, u in zip(channels, observed_axes, us):
                    v *= w[qi, idx[ax], u]
                out[(qi,) + idx + us] = v
    return out


def lp_min_over_hull(points, coord, upper):
    """min x[coord] over conv(points) + orthant with x[i] <= upper[i], using every point."""
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    rows = [i for i in range(d) if upper[i] is not None]
    A = np.vstack([P[:, i] for i in rows]) if rows else None
    b = np.array([upper[i] for i in rows]) if rows else None
    res = linprog(P[:, coord], A_ub=A, b_ub=b, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    return res.fun if res.status == 0 else math.inf


def contra_polymatroid_vertices(values, m, tol=1e-9):
    """Vertices of {x : sum_{i in T} x_i >= s(T), T nonempty} from all m-subsets of tight faces."""
    masks = list(range(1, 1 << m))
    rows = {mk: np.array([(mk >> i) & 1 for i in range(m)], dtype=float) for mk in masks}
    found = []
    for combo in itertools.combinations(masks, m):
        A = np.vstack([rows[c] for c in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, np.array([values[c] for c in combo]))
        if all(rows[mk] @ x >= values[mk] - tol for mk in masks):
            if not any(np.max(np.abs(x - y)) <= tol for y in found):
                found.append(x)
    return found


def random_channel(rng, nq, ny, nu):
    w = rng.dirichlet(np.ones(nu), size=(nq, ny))
    # sprinkle exact zeros so degenerate rows are exercised
    if rng.uniform() < 0.3:
        w[..., 0] = 0.0
        w /= w.sum(axis=-1, keepdims=True)
    return w


def random_ceo_extension(rng, max_m=3, max_alpha=3):
    """Random extended CEO joint with axes (Q, X, Y1..Ym, U1..Um) and a distortion D.

    D is drawn from [H(X|U,Q), H(X|Q)] so the set function is normalized.
    """
    from logloss_rd.info_kernels import JointPmf
    m = int(rng.integers(1, max_m + 1))
    nx = int(rng.integers(2, max_alpha + 1))
    ny = [int(rng.integers(2, max_alpha + 1)) for _ in range(m)]
    nu = [int(rng.integers(2, max_alpha + 1)) for _ in range(m)]
    nq = int(rng.integers(1, 3))
    px = rng.dirichlet(np.ones(nx))
    base = px
    for i in range(m):
        w = rng.dirichlet(np.ones(ny[i]), size=nx)
        # Y_i depends on X alone
        base = np.einsum("x...,xy->x...y", base, w)
    q = rng.dirichlet(np.ones(nq))
    chans = [random_channel(rng, nq, ny[i], nu[i]) for i in range(m)]
    p = extend(base, q, chans, list(range(1, m + 1)))
    names = ["Q", "X"] + [f"Y{i + 1}" for i in range(m)] + [f"U{i + 1}" for i in range(m)]
    joint = JointPmf.from_array(names, p)
    u_axes = list(range(m + 2, 2 * m + 2))
    lo = cond_entropy(p, [1], u_axes + [0])
    hi = max(cond_entropy(p, [1], [0]), lo)
    return joint, float(rng.uniform(lo, hi)), p
