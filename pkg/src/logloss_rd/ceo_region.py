"""The CEO problem under log loss: inner-bound points, symmetric-rate curves and epsilon*.

A CEO instance is a source X seen through conditionally independent
observations Y1..Ym. Achievable triples come from auxiliary channels
U_i <- Y_i: the rates must lie in the Berger-Tung polytope and the
distortion is H(X|U_1..U_m,Q).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .aux_search import (AuxConfig, DominanceRegion, SearchGrid, SweepTable,
                         envelope_value, hull_vertex_indices, lower_convex_envelope,
                         run_sweep)
from .info_kernels import (JointPmf, PmfError, batch_entropy, conditional_entropy,
                           entropy, extend_with_aux, mutual_information)
from .rate_polytope import SetFunction, enumerate_extreme_points, greedy_extreme_point

MARKOV_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CeoInstance:
    """Joint pmf over (X, Y1, ..., Ym) with Y's independent given X."""
    joint: JointPmf

    def __post_init__(self):
        names = self.joint.names
        m = len(names) - 1
        if names != ("X",) + tuple(f"Y{i + 1}" for i in range(m)) or m < 1:
            raise PmfError(f"CEO joint needs axes X, Y1..Ym; got {names}")
        for i in range(m):
            others = [f"Y{j + 1}" for j in range(m) if j != i]
            if others:
                cmi = mutual_information(self.joint, f"Y{i + 1}", others, "X")
                if cmi > MARKOV_TOL:
                    raise PmfError(f"observations are not independent given X: "
                                   f"I(Y{i + 1};rest|X) = {cmi:.3g}")

    @property
    def m(self) -> int:
        return len(self.joint.names) - 1

    @property
    def observed(self) -> list:
        return [f"Y{i + 1}" for i in range(self.m)]


def product_instance(joint: JointPmf) -> CeoInstance:
    """CEO instance with X = (Y1, Y2) on the product alphabet."""
    p = np.asarray(joint.probs)
    n1, n2 = p.shape
    out = np.zeros((n1 * n2, n1, n2))
    for a in range(n1):
        for b in range(n2):
            out[a * n2 + b, a, b] = p[a, b]
    return CeoInstance(JointPmf.from_array(("X", "Y1", "Y2"), out))


@dataclass(frozen=True, eq=False)
class CeoPoint:
    rates: np.ndarray
    distortion: float
    witness: AuxConfig
    corners: tuple = field(default=())


def berger_tung_function(ext: JointPmf, m: int) -> SetFunction:
    """s(I) = I(Y_I;U_I|U_{I^c},Q) on an extended joint."""
    def s(I):
        if not I:
            return 0.0
        rest = [f"U{i + 1}" for i in range(m) if i not in I] + ["Q"]
        return mutual_information(ext, [f"Y{i + 1}" for i in sorted(I)],
                                  [f"U{i + 1}" for i in sorted(I)], rest)
    return SetFunction.from_callable(m, s)


def evaluate_ceo_point(inst: CeoInstance, cfg: AuxConfig) -> CeoPoint:
    if cfg.num_encoders != inst.m:
        raise PmfError(f"config has {cfg.num_encoders} encoders, instance has {inst.m}")
    ext = extend_with_aux(inst.joint, cfg, inst.observed)
    s = berger_tung_function(ext, inst.m)
    corners = tuple(x for x, _ in enumerate_extreme_points(s))
    rates = greedy_extreme_point(s, range(inst.m))
    d = conditional_entropy(ext, "X", [f"U{i + 1}" for i in range(inst.m)] + ["Q"])
    return CeoPoint(rates, d, cfg, corners)


def outer_bound_slacks(inst: CeoInstance, cfg: AuxConfig, rates, D: float) -> dict:
    """Slack of every outer-bound inequality at (rates, D) for the given witness.

    sum_{i in I} R_i >= sum_{i in I} I(U_i;Y_i|X,Q) + H(X|U_{I^c},Q) - D and
    D >= H(X|U_1..U_m,Q). Keys are encoder tuples, plus "D".
    """
    ext = extend_with_aux(inst.joint, cfg, inst.observed)
    m = inst.m
    local = [mutual_information(ext, f"U{i + 1}", f"Y{i + 1}", ["X", "Q"]) for i in range(m)]
    out = {}
    for mask in range(1, 1 << m):
        I = [i for i in range(m) if mask >> i & 1]
        rest = [f"U{i + 1}" for i in range(m) if i not in I] + ["Q"]
        bound = sum(local[i] for i in I) + conditional_entropy(ext, "X", rest) - D
        out[tuple(I)] = float(sum(rates[i] for i in I) - bound)
    out["D"] = D - conditional_entropy(ext, "X", [f"U{i + 1}" for i in range(m)] + ["Q"])
    return out


def sw_minus_d_membership(joint: JointPmf, R1: float, R2: float, D: float,
                          tol: float = 1e-12) -> bool:
    if D < 0:
        raise ValueError("distortion must be nonnegative")
    h12 = entropy(joint, ["Y1", "Y2"])
    return (R1 >= conditional_entropy(joint, "Y1", "Y2") - D - tol
            and R2 >= conditional_entropy(joint, "Y2", "Y1") - D - tol
            and R1 + R2 >= h12 - D - tol)


# ----------------------------------------------------------------- sweeps

def _clean(v):
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) < 1e-13, 0.0, np.maximum(v, 0.0))


def _ceo_columns(P):
    # event axes: 0 X, 1 Y1, 2 Y2, 3 U1, 4 U2
    H = lambda *ax: batch_entropy(P, ax)
    hu12, hu1, hu2 = H(3, 4), H(3), H(4)
    return {
        "s1": _clean(H(1, 4) + hu12 - H(1, 3, 4) - hu2),
        "s2": _clean(H(2, 3) + hu12 - H(2, 3, 4) - hu1),
        "s12": _clean(H(1, 2) + hu12 - H(1, 2, 3, 4)),
        "D": _clean(H(0, 3, 4) - hu12),
    }


class CeoSweep:
    """Swept two-encoder CEO points with their time-sharing closure."""

    def __init__(self, inst: CeoInstance, table: SweepTable):
        self.inst = inst
        self.table = table
        s1, s2, s12, d = table["s1"], table["s2"], table["s12"], table["D"]
        # the two Berger-Tung corners of each config
        a = np.column_stack([s1, s12 - s1, d])
        b = np.column_stack([s12 - s2, s2, d])
        n = len(s1)
        self.points = np.vstack([a, b])
        self.labels = np.concatenate([np.arange(n), np.arange(n)])
        self.region = DominanceRegion(self.points, self.labels)
        self.h_x_given_y = conditional_entropy(inst.joint, "X", inst.observed)

    def min_distortion(self, R1: float, R2: float):
        """(inf D, witness config) over the time-sharing closure at rates (R1, R2)."""
        val, w = self.region.minimize(2, [R1, R2, None])
        if w is None:
            return val, None
        labels, weights = self.region.support(w)
        return val, _mixture(self.table, labels, weights)

    def min_kl(self, R1: float, R2: float) -> float:
        d, _ = self.min_distortion(R1, R2)
        return max(d - self.h_x_given_y, 0.0)

    def curve(self, mode: str = "slice") -> "CeoCurve":
        if mode == "slice":
            return _slice_curve(self)
        if mode == "max":
            t = self.table
            r = np.maximum(np.maximum(t["s1"], t["s2"]), 0.5 * t["s12"])
            pts = np.column_stack([r, t["D"]])
            idx = lower_convex_envelope(pts)
            return CeoCurve(pts[idx], [t.config(i) for i in idx])
        raise ValueError(f"unknown symmetric-rate mode {mode!r}")


def _mixture(table, labels, weights):
    merged = {}
    for lab, w in zip(labels, weights):
        merged[int(lab)] = merged.get(int(lab), 0.0) + float(w)
    keys = sorted(merged)
    if len(keys) == 1:
        return table.config(keys[0])
    wts = np.array([merged[k] for k in keys])
    return AuxConfig.mixture([table.config(k) for k in keys], wts / wts.sum())


@dataclass(frozen=True, eq=False)
class CeoCurve:
    vertices: np.ndarray
    witnesses: list

    def __call__(self, r):
        return envelope_value(self.vertices, r)


def _slice_curve(sweep: CeoSweep) -> CeoCurve:
    """Exact lower boundary of {(R, D) : (R, R, D) in the convexified region}.

    The region conv(points) + orthant is represented inside a large box by
    adding far copies of the hull vertices along each axis; its boundary
    meets the plane R1 = R2 on hull edges, whose crossings are collected and
    reduced to a 2-D lower envelope.
    """
    keep = hull_vertex_indices(sweep.points)
    V = sweep.points[keep]
    lab = sweep.labels[keep]
    M = 4.0 * (float(np.ptp(V, axis=0).max()) + 1.0)
    n = len(V)
    allpts = np.vstack([V] + [V + M * np.eye(3)[k] for k in range(3)])
    base = np.tile(np.arange(n), 4)
    try:
        simplices = ConvexHull(allpts).simplices
    except QhullError:
        simplices = ConvexHull(allpts, qhull_options="QJ").simplices
    edges = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    s = allpts[:, 0] - allpts[:, 1]
    sp, sq = s[edges[:, 0]], s[edges[:, 1]]
    cross = (sp * sq <= 0)
    e = edges[cross]
    sp, sq = sp[cross], sq[cross]
    denom = sp - sq
    t = np.where(denom != 0, sp / np.where(denom != 0, denom, 1.0), 0.0)
    P, Qp = allpts[e[:, 0]], allpts[e[:, 1]]
    X = P + t[:, None] * (Qp - P)
    rd = np.column_stack([np.maximum(X[:, 0], X[:, 1]), X[:, 2]])
    idx = lower_convex_envelope(rd)
    witnesses = []
    for k in idx:
        i, j = e[k]
        labels = [lab[base[i]], lab[base[j]]]
        witnesses.append(_mixture(sweep.table, labels, [1 - t[k], t[k]])
                         if 0 < t[k] < 1 else sweep.table.config(labels[0 if t[k] <= 0 else 1]))
    return CeoCurve(rd[idx], witnesses)


def ceo_sweep(inst: CeoInstance, grid: SearchGrid = SearchGrid(), threads: int = 1,
              cache=None) -> CeoSweep:
    if inst.m != 2:
        raise ValueError("curve sweeps support two encoders")
    table = run_sweep(inst.joint, inst.observed, grid, _ceo_columns, "ceo",
                      threads=threads, cache=cache)
    return CeoSweep(inst, table)


@lru_cache(maxsize=8)
def _memo_sweep(inst, grid, threads, cache):
    return ceo_sweep(inst, grid, threads, cache)


def ceo_curve(inst: CeoInstance, grid: SearchGrid = SearchGrid(), mode: str = "slice",
              threads: int = 1, cache=None) -> CeoCurve:
    """Lower convex envelope of the symmetric-rate (R, D) curve.

    mode "slice" is the exact cut R1 = R2 of the time-sharing closure; mode
    "max" uses max(I(Y1;U1|U2), I(Y2;U2|U1), I(U1,U2;Y1,Y2)/2) per config,
    which can only be higher.
    """
    return _memo_sweep(inst, grid, threads, cache).curve(mode)


def min_kl(inst: CeoInstance, R1: float, R2: float, grid: SearchGrid = SearchGrid(),
           threads: int = 1, cache=None) -> float:
    """epsilon* = inf{D achievable at (R1, R2)} - H(X|Y1,Y2)."""
    if R1 < 0 or R2 < 0:
        raise ValueError("rates must be nonnegative")
    return _memo_sweep(inst, grid, threads, cache).min_kl(R1, R2)
