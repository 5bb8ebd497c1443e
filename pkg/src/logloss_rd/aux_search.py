"""Search over auxiliary test channels and convexification of the resulting points.

Channels p(u|y) are enumerated on the simplex mesh with step 1/K. Time sharing
(the variable Q) is never enumerated: it is recovered by taking convex hulls
of the swept points, either as a 2-D lower envelope or as an LP dominance
check in up to four dimensions.
"""
from __future__ import annotations

import hashlib
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .info_kernels import NEG_TOL, SUM_TOL, JointPmf, PmfError

CACHE_ENV = "LOGLOSS_RD_CACHE"
CHUNK = 1 << 16


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class AuxConfig:
    """Time-sharing weights p(q) and per-encoder channels p(u_i|y_i, q).

    channels[i] has shape (|Q|, |Y_i|, |U_i|).
    """
    q_weights: np.ndarray
    channels: tuple

    def __post_init__(self):
        q = np.asarray(self.q_weights, dtype=float).ravel()
        if q.min() < -NEG_TOL or abs(q.sum() - 1) > SUM_TOL:
            raise PmfError("time-sharing weights must be a pmf")
        chans = []
        for w in self.channels:
            w = np.asarray(w, dtype=float)
            if w.ndim == 2:
                w = w[None]
            if w.shape[0] != q.size:
                raise PmfError("every channel needs one matrix per time-sharing value")
            if w.min() < -NEG_TOL or np.any(np.abs(w.sum(axis=2) - 1) > SUM_TOL):
                raise PmfError("channel rows must be pmfs")
            w = np.clip(w, 0.0, None)
            w.setflags(write=False)
            chans.append(w)
        q = np.clip(q, 0.0, None)
        q.setflags(write=False)
        object.__setattr__(self, "q_weights", q)
        object.__setattr__(self, "channels", tuple(chans))

    @classmethod
    def single(cls, *matrices) -> "AuxConfig":
        return cls(np.ones(1), tuple(np.asarray(m, dtype=float)[None] for m in matrices))

    @classmethod
    def mixture(cls, configs: Sequence["AuxConfig"], weights) -> "AuxConfig":
        """Time-share several configs; alphabets are padded to the largest U."""
        weights = np.asarray(weights, dtype=float)
        m = configs[0].num_encoders
        qs, chans = [], [[] for _ in range(m)]
        for c, w in zip(configs, weights):
            qs.append(w * c.q_weights)
            for i in range(m):
                chans[i].append(c.channels[i])
        for i in range(m):
            nu = max(c.shape[2] for c in chans[i])
            chans[i] = np.concatenate(
                [np.pad(c, ((0, 0), (0, 0), (0, nu - c.shape[2]))) for c in chans[i]])
        return cls(np.concatenate(qs), tuple(chans))

    @property
    def num_encoders(self) -> int:
        return len(self.channels)

    @property
    def q_size(self) -> int:
        return self.q_weights.size

    def __repr__(self):
        rows = ["|".join(",".join(f"{v:g}" for v in r) for r in w[0]) for w in self.channels]
        if self.q_size == 1:
            return f"AuxConfig({'; '.join(rows)})"
        return f"AuxConfig(|Q|={self.q_size}, q={np.round(self.q_weights, 6).tolist()})"


@dataclass(frozen=True)
class SearchGrid:
    """Mesh resolution K (rows on multiples of 1/K) and the enumeration budget."""
    K: int = 20
    max_configs: int = 5_000_000

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("mesh resolution K must be at least 1")


@dataclass(frozen=True, eq=False)
class LabeledPoint:
    coords: tuple
    witness: AuxConfig | None = None


def simplex_mesh(n: int, K: int) -> np.ndarray:
    """All pmfs on n letters with entries in {0, 1/K, ..., 1}, lexicographic in the counts."""
    rows = []
    for bars in itertools.combinations(range(K + n - 1), n - 1):
        edges = (-1,) + bars + (K + n - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    rows.sort()
    return np.asarray(rows, dtype=float) / K


def channel_mesh(ny: int, nu: int, K: int) -> np.ndarray:
    """Every channel with mesh rows, shape (C**ny, ny, nu), row 0 varying slowest."""
    rows = simplex_mesh(nu, K)
    idx = np.array(list(itertools.product(range(len(rows)), repeat=ny)), dtype=np.intp)
    return rows[idx]


def config_count(y_sizes: Sequence[int], grid: SearchGrid, u_sizes=None) -> int:
    u_sizes = list(u_sizes) if u_sizes is not None else list(y_sizes)
    n = 1
    for ny, nu in zip(y_sizes, u_sizes):
        n *= comb(grid.K + nu - 1, nu - 1) ** ny
    return n


def _check_budget(y_sizes, grid, u_sizes):
    n = config_count(y_sizes, grid, u_sizes)
    if n > grid.max_configs:
        raise BudgetError(f"{n} configurations exceed the budget of {grid.max_configs}")
    return n


def enumerate_configs(y_sizes: Sequence[int], grid: SearchGrid, u_sizes=None):
    """Yield every single-letter AuxConfig on the mesh in deterministic order.

    |U_i| defaults to |Y_i|; smaller auxiliary alphabets are covered because
    mesh channels may leave output letters unused.
    """
    u_sizes = list(u_sizes) if u_sizes is not None else list(y_sizes)
    _check_budget(y_sizes, grid, u_sizes)
    meshes = [channel_mesh(ny, nu, grid.K) for ny, nu in zip(y_sizes, u_sizes)]
    for combo in itertools.product(*[range(len(m)) for m in meshes]):
        yield AuxConfig.single(*[m[i] for m, i in zip(meshes, combo)])


# ---------------------------------------------------------------- sweeps

class SweepTable:
    """Per-config information quantities from a mesh sweep, in enumeration order."""

    def __init__(self, columns: dict, meshes: list):
        self.columns = columns
        self.meshes = meshes
        self.shape = tuple(len(m) for m in meshes)

    def __len__(self):
        return int(np.prod(self.shape))

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def config(self, row: int) -> AuxConfig:
        idx = np.unravel_index(int(row), self.shape)
        return AuxConfig.single(*[m[i] for m, i in zip(self.meshes, idx)])


def _batch_joint(base: np.ndarray, obs_axes, meshes, shape, lo, hi):
    """Joint tensors (B, *base_shape, U1, .., Um) for flat config indices [lo, hi)."""
    flat = np.arange(lo, hi)
    idx = np.unravel_index(flat, shape)
    letters = "abcdefgh"[:base.ndim]
    u_letters = "stuvw"[:len(meshes)]
    subs, ops = [letters], [base]
    for i, (ax, mesh) in enumerate(zip(obs_axes, meshes)):
        subs.append("Z" + letters[ax] + u_letters[i])
        ops.append(mesh[idx[i]])
    return np.einsum(",".join(subs) + "->Z" + letters + u_letters, *ops)


def _cache_key(base, obs_axes, grid, u_sizes, tag) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(base, dtype="<f8").tobytes())
    h.update(repr((base.shape, tuple(obs_axes), grid.K, tuple(u_sizes), tag)).encode())
    return h.hexdigest()[:24]


def cache_dir(explicit=None) -> Path | None:
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def run_sweep(joint: JointPmf, observed: Sequence[str], grid: SearchGrid,
              evaluate: Callable[[np.ndarray], dict], tag: str, u_sizes=None,
              threads: int = 1, cache=None) -> SweepTable:
    """Evaluate `evaluate(batch_joint)` over every mesh config.

    `evaluate` receives an array of shape (B, *joint.shape, U1, ..., Um) and
    returns a dict of 1-d arrays. Chunks are fixed-size and reassembled in
    order, so results do not depend on the thread count. When a cache
    directory is configured each chunk is stored as CSV and reused.
    """
    y_sizes = [joint.size(n) for n in observed]
    u_sizes = list(u_sizes) if u_sizes is not None else y_sizes
    n = _check_budget(y_sizes, grid, u_sizes)
    meshes = [channel_mesh(ny, nu, grid.K) for ny, nu in zip(y_sizes, u_sizes)]
    shape = tuple(len(m) for m in meshes)
    obs_axes = [joint.axis(n) for n in observed]
    base = np.asarray(joint.probs)
    root = cache_dir(cache)
    folder = None
    if root is not None:
        folder = root / _cache_key(base, obs_axes, grid, u_sizes, tag)
        folder.mkdir(parents=True, exist_ok=True)
    starts = list(range(0, n, CHUNK))

    def work(k):
        lo, hi = starts[k], min(starts[k] + CHUNK, n)
        path = folder / f"chunk_{k:05d}.csv" if folder is not None else None
        if path is not None and path.exists():
            return _read_chunk(path)
        cols = evaluate(_batch_joint(base, obs_axes, meshes, shape, lo, hi))
        cols = {k2: np.asarray(v, dtype=float) for k2, v in cols.items()}
        if path is not None:
            _write_chunk(path, lo, cols)
        return cols

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(starts))))
    else:
        parts = [work(k) for k in range(len(starts))]
    names = list(parts[0])
    columns = {c: np.concatenate([p[c] for p in parts]) for c in names}
    return SweepTable(columns, meshes)


def _write_chunk(path: Path, lo: int, cols: dict):
    names = list(cols)
    ids = np.arange(lo, lo + len(cols[names[0]]))
    data = np.column_stack([ids] + [cols[c] for c in names])
    header = "config," + ",".join(f"{c}_bits" for c in names)
    tmp = path.with_suffix(".tmp")
    np.savetxt(tmp, data, delimiter=",", header=header, comments="",
               fmt=["%d"] + ["%.17g"] * len(names))
    tmp.replace(path)


def _read_chunk(path: Path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name[:-5]: data[:, j + 1] for j, name in enumerate(header[1:])}


# ---------------------------------------------------------- convexification

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_convex_envelope(points) -> np.ndarray:
    """Indices of the lower-left convex boundary of 2-D points (R, D).

    Vertices come back sorted by R increasing with D strictly decreasing,
    ending at the leftmost point of minimum D.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("lower_convex_envelope expects an (n, 2) array")
    if len(pts) == 0:
        return np.zeros(0, dtype=np.intp)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    hull = []
    for i in order:
        p = pts[i]
        if hull and pts[hull[-1]][0] == p[0]:
            continue
        # pop while the middle point sits on or above the chord, measured in D
        while len(hull) >= 2 and _cross(pts[hull[-2]], pts[hull[-1]], p) <= \
                1e-12 * (p[0] - pts[hull[-2]][0]):
            hull.pop()
        hull.append(i)
    out = [hull[0]]
    for i in hull[1:]:
        if pts[i][1] < pts[out[-1]][1]:
            out.append(i)
        else:
            break
    return np.asarray(out, dtype=np.intp)


def envelope_value(vertices: np.ndarray, r) -> np.ndarray:
    """D(R) on the polyline through envelope vertices; +inf left of the first vertex."""
    v = np.asarray(vertices, dtype=float)
    r = np.asarray(r, dtype=float)
    out = np.interp(r, v[:, 0], v[:, 1])
    return np.where(r < v[0, 0], np.inf, out)


def hull_vertex_indices(points: np.ndarray) -> np.ndarray:
    """Indices of a subset of `points` with the same convex hull."""
    pts = np.asarray(points, dtype=float)
    _, first = np.unique(np.round(pts, 12), axis=0, return_index=True)
    first = np.sort(first)
    sub = pts[first]
    if len(sub) <= sub.shape[1] + 1:
        return first
    centered = sub - sub.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int((sv > 1e-10 * max(sv[0], 1.0)).sum())
    if rank == 0:
        return first[:1]
    proj = centered @ vt[:rank].T
    if rank == 1:
        return first[[int(np.argmin(proj[:, 0])), int(np.argmax(proj[:, 0]))]]
    try:
        verts = ConvexHull(proj).vertices
    except QhullError:
        verts = ConvexHull(proj, qhull_options="QJ").vertices
    return first[np.sort(verts)]


class DominanceRegion:
    """conv(points) + nonnegative orthant, with LP membership and minimization.

    A query q is a member when some convex combination of the points is
    coordinate-wise no larger than q.
    """

    def __init__(self, points, labels=None, reduce: bool = True):
        pts = np.asarray(points, dtype=float)
        labels = np.arange(len(pts)) if labels is None else np.asarray(labels)
        keep = hull_vertex_indices(pts) if reduce and len(pts) else np.arange(len(pts))
        self.points = pts[keep]
        self.labels = labels[keep]
        self.dim = pts.shape[1]

    def _solve(self, c, rows, rhs):
        P = self.points
        n = len(P)
        res = linprog(
            c, A_ub=P[:, rows].T if rows else None, b_ub=rhs if rows else None,
            A_eq=np.ones((1, n)), b_eq=[1.0], bounds=(0, None), method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
        if res.status != 0:
            return None
        return _polish(P, res.x, rows, rhs)

    def minimize(self, coord: int, upper) -> tuple:
        """min sum(w * p[coord]) subject to sum(w * p[j]) <= upper[j] for j != coord.

        `upper` has length dim; entries for `coord` or set to None are free.
        Returns (value, weights) or (inf, None) if infeasible.
        """
        upper = [None if j == coord else u for j, u in enumerate(upper)]
        return self.linear_min(np.eye(self.dim)[coord], upper)

    def linear_min(self, direction, upper) -> tuple:
        """min direction . x over convex combinations x of the points with x <= upper.

        Unlike `minimize` the direction may have negative entries; the
        orthant is not added, so this optimizes over conv(points) only.
        """
        rows = [j for j in range(self.dim) if upper[j] is not None]
        rhs = [upper[j] for j in rows]
        c = self.points @ np.asarray(direction, dtype=float)
        w = self._solve(c, rows, rhs)
        if w is None:
            return float("inf"), None
        return float(w @ c), w

    def witness(self, q, tol: float = 1e-9):
        q = np.asarray(q, dtype=float)
        w = self._solve(np.zeros(len(self.points)), list(range(self.dim)), list(q + tol))
        return w

    def contains(self, q, tol: float = 1e-9) -> bool:
        return self.witness(q, tol) is not None

    def __call__(self, q) -> bool:
        return self.contains(q)

    def support(self, weights, cutoff: float = 1e-9):
        """(labels, weights) of the active points of a solution."""
        s = np.flatnonzero(weights > cutoff)
        return self.labels[s], weights[s]


def _polish(P, x, rows, rhs):
    """Re-solve the active basis exactly so tight constraints hold to round-off."""
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    s = np.flatnonzero(x > 1e-11)
    if not rows:
        return x
    A = P[:, rows].T
    b = np.asarray(rhs, dtype=float)
    slack = b - A @ x
    act = np.flatnonzero(np.abs(slack) <= 1e-7)
    M = np.vstack([A[act][:, s], np.ones((1, len(s)))])
    y = np.concatenate([b[act], [1.0]])
    sol, *_ = np.linalg.lstsq(M, y, rcond=None)
    if np.max(np.abs(M @ sol - y)) > 1e-12 or sol.min() < -1e-12:
        return x
    z = np.zeros_like(x)
    z[s] = np.clip(sol, 0.0, None)
    z /= z.sum()
    if np.any(A @ z > b + 1e-10):
        return x
    return z


def convexify_region(points, labels=None) -> DominanceRegion:
    """Membership oracle for the time-sharing closure of swept points."""
    return DominanceRegion(points, labels)
