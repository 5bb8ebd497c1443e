"""Two-encoder multiterminal source coding under log loss.

Each decoder output is scored against its own source Y_i. The inner region
is swept directly. Two further descriptions are provided for verification:
the coupling X = (Y_B, B) that turns the problem into a CEO instance, and a
five-inequality outer description parameterized by an auxiliary D1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .aux_search import (AuxConfig, DominanceRegion, SearchGrid, SweepTable,
                         run_sweep)
from .ceo_region import CeoInstance, _clean, _mixture
from .info_kernels import (JointPmf, PmfError, batch_entropy, binary_entropy,
                           conditional_entropy, entropy, extend_with_aux,
                           mutual_information)

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MtscPoint:
    R1: float
    R2: float
    D1: float
    D2: float
    witness: AuxConfig | None = None
    corners: tuple = field(default=())

    def __post_init__(self):
        if min(self.R1, self.R2, self.D1, self.D2) < -TOL:
            raise ValueError("rates and distortions must be nonnegative")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.R1, self.R2, self.D1, self.D2])


@dataclass(frozen=True)
class CouplingParam:
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"coupling weight {self.t} outside [0, 1]")


def _check_pair(joint: JointPmf):
    if joint.names != ("Y1", "Y2"):
        raise PmfError(f"expected a joint over (Y1, Y2), got {joint.names}")


def _quantities(joint: JointPmf, cfg: AuxConfig) -> dict:
    """Every conditional entropy the two-encoder formulas need, for one config."""
    _check_pair(joint)
    if cfg.num_encoders != 2:
        raise PmfError("multiterminal configs need exactly two channels")
    ext = extend_with_aux(joint, cfg)
    H = lambda a, b=(): conditional_entropy(ext, list(a), list(b) + ["Q"])
    I = lambda a, b, c=(): mutual_information(ext, list(a), list(b), list(c) + ["Q"])
    return {
        "s1": I(["Y1"], ["U1"], ["U2"]),
        "s2": I(["Y2"], ["U2"], ["U1"]),
        "s12": I(["Y1", "Y2"], ["U1", "U2"]),
        "d1": H(["Y1"], ["U1", "U2"]),
        "d2": H(["Y2"], ["U1", "U2"]),
        "h1": H(["Y1"]),
        "h2": H(["Y2"]),
        "h1_u1": H(["Y1"], ["U1"]),
        "h1_u2": H(["Y1"], ["U2"]),
        "h2_u1": H(["Y2"], ["U1"]),
        "h2_u2": H(["Y2"], ["U2"]),
        "i1": I(["Y1"], ["U1"]),
        "i2": I(["Y2"], ["U2"]),
        "i2_given_y1": I(["Y2"], ["U2"], ["Y1"]),
        "i2_given_u1": I(["Y2"], ["U2"], ["U1"]),
        "i1_given_u2": I(["Y1"], ["U1"], ["U2"]),
        "delta": I(["Y1"], ["Y2"], ["U1", "U2"]),
    }


def evaluate_mtsc_point(joint: JointPmf, cfg: AuxConfig) -> MtscPoint:
    q = _quantities(joint, cfg)
    a = (q["s1"], q["s12"] - q["s1"])
    b = (q["s12"] - q["s2"], q["s2"])
    return MtscPoint(a[0], a[1], q["d1"], q["d2"], cfg, (a, b))


# ----------------------------------------------------------------- sweeps

def _mtsc_columns(P):
    # event axes: 0 Y1, 1 Y2, 2 U1, 3 U2
    H = lambda *ax: batch_entropy(P, ax)
    hu12, hu1, hu2 = H(2, 3), H(2), H(3)
    h1u12, h2u12, hall = H(0, 2, 3), H(1, 2, 3), H(0, 1, 2, 3)
    h1, h12 = H(0), H(0, 1)
    return {
        "s1": _clean(H(0, 3) + hu12 - h1u12 - hu2),
        "s2": _clean(H(1, 2) + hu12 - h2u12 - hu1),
        "s12": _clean(h12 + hu12 - hall),
        "d1": _clean(h1u12 - hu12),
        "d2": _clean(h2u12 - hu12),
        "h1_u1": _clean(H(0, 2) - hu1),
        "h1_u2": _clean(H(0, 3) - hu2),
        "i2_given_y1": _clean(h12 + H(0, 3) - H(0, 1, 3) - h1),
        "delta": _clean(h1u12 + h2u12 - hall - hu12),
    }


class MtscSweep:
    """Swept inner points and the swept five-inequality outer description."""

    def __init__(self, joint: JointPmf, table: SweepTable):
        self.joint = joint
        self.table = table
        t = table
        n = len(t)
        inner_a = np.column_stack([t["s1"], t["s12"] - t["s1"], t["d1"], t["d2"]])
        inner_b = np.column_stack([t["s12"] - t["s2"], t["s2"], t["d1"], t["d2"]])
        self.inner_points = np.vstack([inner_a, inner_b])
        self.inner_labels = np.tile(np.arange(n), 2)
        self._inner = None
        self._outer = None
        self.h1 = entropy(joint, "Y1")

    @property
    def inner(self) -> DominanceRegion:
        if self._inner is None:
            self._inner = DominanceRegion(self.inner_points, self.inner_labels)
        return self._inner

    @property
    def outer(self) -> DominanceRegion:
        if self._outer is None:
            pts, labels = outer_description_points(self.table, self.h1)
            self._outer = DominanceRegion(pts, labels)
        return self._outer

    def witness(self, weights) -> AuxConfig:
        labels, w = self.inner.support(weights)
        return _mixture(self.table, labels, w)


def mtsc_sweep(joint: JointPmf, grid: SearchGrid = SearchGrid(), threads: int = 1,
               cache=None) -> MtscSweep:
    _check_pair(joint)
    table = run_sweep(joint, ["Y1", "Y2"], grid, _mtsc_columns, "mtsc",
                      threads=threads, cache=cache)
    return MtscSweep(joint, table)


def mtsc_membership(joint: JointPmf, query, grid: SearchGrid = SearchGrid(),
                    sweep: MtscSweep | None = None, tol: float = TOL):
    """(member, witness): is query >= some point of the time-sharing closure?"""
    sweep = sweep or mtsc_sweep(joint, grid)
    q = query.vector if isinstance(query, MtscPoint) else np.asarray(query, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("query must be finite")
    w = sweep.inner.witness(q, tol)
    if w is None:
        return False, None
    return True, sweep.witness(w)


def list_decoding_relabel(R1, R2, delta1, delta2, joint, grid=SearchGrid(), sweep=None):
    """List-size exponents play the role of log-loss distortions."""
    return mtsc_membership(joint, [R1, R2, delta1, delta2], grid, sweep)[0]


# ------------------------------------------------------- outer description

@dataclass(frozen=True)
class OuterBounds:
    """Lower bounds of the five-inequality description at a given D1."""
    R1: float
    R2: float
    R12: float
    D1: float
    D2: float

    def slacks(self, R1, R2, D1, D2) -> dict:
        return {"R1": R1 - self.R1, "R2": R2 - self.R2, "R12": R1 + R2 - self.R12,
                "D1": D1 - self.D1, "D2": D2 - self.D2}


def _outer_from(q: dict, D1: float) -> OuterBounds:
    return OuterBounds(
        R1=q["h1_u2"] - D1,
        R2=q["i2_given_y1"] + q["h1_u1"] - D1,
        R12=q["i2_given_y1"] + q["h1"] - D1,
        D1=q["d1"],
        D2=D1 + q["d2"] - q["d1"],
    )


def seq_outer_region_point(joint: JointPmf, cfg: AuxConfig, D1: float) -> OuterBounds:
    """Bounds R1 >= H(Y1|U2,Q) - D1, R2 >= I(Y2;U2|Y1,Q) + H(Y1|U1,Q) - D1,
    R1+R2 >= I(Y2;U2|Y1,Q) + H(Y1) - D1, D2 >= D1 + H(Y2|U,Q) - H(Y1|U,Q)."""
    q = _quantities(joint, cfg)
    if D1 < q["d1"] - TOL:
        raise ValueError(f"D1={D1} is below H(Y1|U1,U2,Q)={q['d1']}")
    return _outer_from(q, D1)


def _corners(a, b, c, D1):
    """Vertices of {R >= 0, R1 >= a-D1, R2 >= b-D1, R1+R2 >= c-D1}."""
    lo1 = np.maximum(a - D1, 0.0)
    lo2 = np.maximum(b - D1, 0.0)
    g = c - D1
    first = (lo1, np.maximum(lo2, g - lo1))
    second = (np.maximum(lo1, g - lo2), lo2)
    return first, second


def outer_description_points(table: SweepTable, h1: float):
    """Generators of the swept outer description as 4-d points and config labels.

    For a fixed config the feasible (R1, R2, D1, D2) form a polyhedron whose
    vertices sit at D1 breakpoints where a rate bound changes sign or the
    two corners swap; those breakpoints are enumerated directly.
    """
    a = table["h1_u2"]
    b = table["i2_given_y1"] + table["h1_u1"]
    c = table["i2_given_y1"] + h1
    lo = table["d1"]
    shift = table["d2"] - table["d1"]
    n = len(a)
    cands = [lo, np.full(n, h1), a, b, c, a + b - c]
    pts, labels = [], []
    for D1 in cands:
        ok = (D1 >= lo - 1e-12) & (D1 <= h1 + 1e-12)
        D1c = np.clip(D1, lo, h1)
        for r1, r2 in _corners(a, b, c, D1c):
            pts.append(np.column_stack([r1, r2, D1c, D1c + shift])[ok])
            labels.append(np.flatnonzero(ok))
    return np.vstack(pts), np.concatenate(labels)


def sandwich_report(sweep: MtscSweep, step: float = 0.1, band: float = 0.02) -> dict:
    """Compare inner and outer membership on a 4-d lattice of (R1, R2, D1, D2).

    A disagreement counts against the band only if D2 is more than `band`
    away from both boundaries at (R1, R2, D1).
    """
    h1, h2 = entropy(sweep.joint, "Y1"), entropy(sweep.joint, "Y2")
    r1s = np.round(np.arange(0, h1 + step + 1e-9, step), 12)
    r2s = np.round(np.arange(0, h2 + step + 1e-9, step), 12)
    d1s = np.round(np.arange(0, h1 + 1e-9, step), 12)
    d2s = np.round(np.arange(0, h2 + 1e-9, step), 12)
    worst, queries, outside = 0.0, 0, 0
    for r1 in r1s:
        for r2 in r2s:
            for d1 in d1s:
                a = sweep.inner.minimize(3, [r1, r2, d1, None])[0]
                b = sweep.outer.minimize(3, [r1, r2, d1, None])[0]
                if np.isfinite(a) and np.isfinite(b):
                    worst = max(worst, abs(a - b))
                elif np.isfinite(a) != np.isfinite(b):
                    worst = float("inf")
                for d2 in d2s:
                    queries += 1
                    if (d2 >= a - 1e-9) != (d2 >= b - 1e-9):
                        if min(abs(d2 - a), abs(d2 - b)) > band:
                            outside += 1
    return {"queries": queries, "max_boundary_gap_bits": worst,
            "disagreements_outside_band": outside, "band_bits": band, "step_bits": step}


@dataclass(frozen=True)
class VertexCase:
    label: str
    rates: tuple
    theta: float
    D1: float
    D2: float
    scheme_rates: tuple


class ConstructionError(AssertionError):
    pass


def bt_vertex_construction(joint: JointPmf, cfg: AuxConfig, D1: float, D2: float,
                           tol: float = TOL) -> list:
    """Time-sharing schemes that reach each vertex of the outer rate polytope.

    For each of the two vertices r1 = ([H(Y1|U2,Q) - D1]^+, ...) and
    r2 = (..., [I(Y2;U2|Y1,Q) + H(Y1|U1,Q) - D1]^+) a mixture of two
    Berger-Tung schemes built from sub-configs of cfg is chosen. Raises
    ConstructionError if a mixture misses (D1, D2).
    """
    q = _quantities(joint, cfg)
    if not (q["d1"] - tol <= D1 <= q["h1"] + tol):
        raise ValueError(f"D1={D1} outside [H(Y1|U,Q), H(Y1)] = [{q['d1']}, {q['h1']}]")
    if D2 < D1 + q["d2"] - q["d1"] - tol:
        raise ValueError("D2 violates D2 >= D1 + H(Y2|U,Q) - H(Y1|U,Q)")
    c = q["i2_given_y1"] + q["h1"] - D1
    r11 = max(q["h1_u2"] - D1, 0.0)
    r22 = max(q["i2_given_y1"] + q["h1_u1"] - D1, 0.0)
    v1 = (r11, c - r11)
    v2 = (c - r22, r22)

    def mix(num, den, top, bottom):
        theta = num / den if den > 0 else 0.0
        if -1e-12 < theta < 0:
            theta = 0.0
        if 1 < theta < 1 + 1e-12:
            theta = 1.0
        d1 = theta * q[top[0]] + (1 - theta) * q[bottom[0]]
        d2 = theta * q[top[1]] + (1 - theta) * q[bottom[1]]
        return theta, d1, d2

    out = []
    if r11 <= tol:
        th, d1, d2 = mix(q["i2"] - c, q["i2"], ("h1", "h2"), ("h1_u2", "h2_u2"))
        out.append(VertexCase("1.1", v1, th, d1, d2, (0.0, (1 - th) * q["i2"])))
    else:
        th, d1, d2 = mix(D1 - q["h1_u2"] + q["i1_given_u2"], q["i1_given_u2"],
                         ("h1_u2", "h2_u2"), ("d1", "d2"))
        out.append(VertexCase("1.2", v1, th, d1, d2, ((1 - th) * q["i1_given_u2"], q["i2"])))
    if r22 <= tol:
        th, d1, d2 = mix(q["i1"] - c, q["i1"], ("h1", "h2"), ("h1_u1", "h2_u1"))
        out.append(VertexCase("2.1", v2, th, d1, d2, ((1 - th) * q["i1"], 0.0)))
    else:
        th, d1, d2 = mix(D1 - q["h1_u1"] - q["i2_given_y1"] + q["i2_given_u1"],
                         q["i2_given_u1"], ("h1_u1", "h2_u1"), ("d1", "d2"))
        out.append(VertexCase("2.2", v2, th, d1, d2, (q["i1"], (1 - th) * q["i2_given_u1"])))
    for v in out:
        if not -tol <= v.theta <= 1 + tol:
            raise ConstructionError(f"case {v.label}: theta={v.theta} outside [0, 1]")
        if v.D1 > D1 + tol or v.D2 > D2 + tol:
            raise ConstructionError(f"case {v.label}: ({v.D1}, {v.D2}) exceeds ({D1}, {D2})")
    return out


# --------------------------------------------------------------- coupling

def coupled_ceo_instance(joint: JointPmf, t) -> CeoInstance:
    """CEO instance with X = (Y_B, B), B ~ Bern(t) independent of (Y1, Y2).

    X takes values in Y1 x {1} followed by Y2 x {2}; B = 1 selects Y1.
    """
    _check_pair(joint)
    t = t.t if isinstance(t, CouplingParam) else CouplingParam(float(t)).t
    p = np.asarray(joint.probs)
    n1, n2 = p.shape
    out = np.zeros((n1 + n2, n1, n2))
    for a in range(n1):
        out[a, a, :] = t * p[a, :]
    for b in range(n2):
        out[n1 + b, :, b] = (1 - t) * p[:, b]
    # with t in {0, 1} one branch is empty; Markov structure still holds
    return CeoInstance(JointPmf.from_array(("X", "Y1", "Y2"), out))


def tuning_coupling_check(joint: JointPmf, cfg: AuxConfig, t) -> float:
    """H(X_t|U1,U2,Q) - h2(t) - t H(Y1|U1,U2,Q) - (1-t) H(Y2|U1,U2,Q)."""
    t = t.t if isinstance(t, CouplingParam) else float(t)
    inst = coupled_ceo_instance(joint, t)
    ext = extend_with_aux(inst.joint, cfg, inst.observed)
    lhs = conditional_entropy(ext, "X", ["U1", "U2", "Q"])
    ext2 = extend_with_aux(joint, cfg)
    rhs = (binary_entropy(t) + t * conditional_entropy(ext2, "Y1", ["U1", "U2", "Q"])
           + (1 - t) * conditional_entropy(ext2, "Y2", ["U1", "U2", "Q"]))
    return lhs - rhs


# ------------------------------------------------------- amplify convexity

class PreconditionError(ValueError):
    def __init__(self, t, excess):
        super().__init__(f"pointwise constraint fails at t={t} by {excess:.3g}")
        self.t = t
        self.excess = excess


@dataclass(frozen=True, eq=False)
class AmplifyResult:
    t_star: float
    theta: float
    x1: object
    x2: object
    g1: float
    g2: float


def _segment_window(a0, a1, bound):
    """{w in [0,1] : (1-w) a0 + w a1 <= bound} as an interval (lo, hi) or None."""
    d = a1 - a0
    if abs(d) < 1e-300:
        return (0.0, 1.0) if a0 <= bound else None
    w = (bound - a0) / d
    lo, hi = (0.0, min(1.0, w)) if d > 0 else (max(0.0, w), 1.0)
    return (lo, hi) if lo <= hi else None


def amplify_sampled(ts: Sequence[float], xs: Sequence, f1, f2, r1, r2, eps=1e-6):
    """Certificate search on a fixed sample grid; returns AmplifyResult or None.

    Raises PreconditionError if t f1(x_t) + (1-t) f2(x_t) exceeds
    t r1 + (1-t) r2 + eps at a grid point.
    """
    ts = np.asarray(ts, dtype=float)
    F1 = np.array([f1(x) for x in xs], dtype=float)
    F2 = np.array([f2(x) for x in xs], dtype=float)
    excess = ts * F1 + (1 - ts) * F2 - (ts * r1 + (1 - ts) * r2)
    bad = np.flatnonzero(excess > eps)
    if len(bad):
        raise PreconditionError(float(ts[bad[0]]), float(excess[bad[0]]))
    for j in range(len(ts) - 1):
        w1 = _segment_window(F1[j], F1[j + 1], r1 + eps)
        w2 = _segment_window(F2[j], F2[j + 1], r2 + eps)
        if w1 is None or w2 is None:
            continue
        lo, hi = max(w1[0], w2[0]), min(w1[1], w2[1])
        if lo > hi:
            continue
        w = 0.5 * (lo + hi)
        theta = 1.0 - w
        g1 = theta * F1[j] + w * F1[j + 1]
        g2 = theta * F2[j] + w * F2[j + 1]
        return AmplifyResult(float(ts[j] + w * (ts[j + 1] - ts[j])), float(theta),
                             xs[j], xs[j + 1], float(g1), float(g2))
    if len(ts) == 1 and F1[0] <= r1 + eps and F2[0] <= r2 + eps:
        return AmplifyResult(float(ts[0]), 1.0, xs[0], xs[0], float(F1[0]), float(F2[0]))
    return None


def amplify_convexity(h, f1: Callable, f2: Callable, r1: float, r2: float,
                      eps: float = 1e-6, ts=None, max_refine: int = 12) -> AmplifyResult:
    """Find t* and neighbouring samples x1, x2 = h(t_j), h(t_{j+1}) whose mixture
    theta f_i(x1) + (1-theta) f_i(x2) is within eps of r_i for both i.

    `h` is a callable t -> x or a sequence of samples on `ts` (default 101
    uniform points). Interpolating between consecutive samples gives a path
    that starts with f2 <= r2 and ends with f1 <= r1 and cannot cross the
    region where both exceed their targets. When h is callable and the grid
    is too coarse, segments are bisected.
    """
    ts = np.linspace(0.0, 1.0, 101) if ts is None else np.asarray(ts, dtype=float)
    callable_h = callable(h)
    xs = [h(t) for t in ts] if callable_h else list(h)
    if len(xs) != len(ts):
        raise ValueError("need one sample per grid point")
    for _ in range(max_refine + 1):
        res = amplify_sampled(ts, xs, f1, f2, r1, r2, eps)
        if res is not None or not callable_h:
            break
        mids = 0.5 * (ts[1:] + ts[:-1])
        new_ts = np.empty(2 * len(ts) - 1)
        new_ts[0::2], new_ts[1::2] = ts, mids
        new_xs = []
        for k in range(len(ts) - 1):
            new_xs += [xs[k], h(mids[k])]
        new_xs.append(xs[-1])
        ts, xs = new_ts, new_xs
    if res is None:
        raise RuntimeError("no certified point found; refine the grid or loosen eps")
    return res


def coupling_harness(joint: JointPmf, R1: float, R2: float, r1: float, r2: float,
                     grid: SearchGrid = SearchGrid(6), eps: float = 1e-6,
                     sweep: MtscSweep | None = None) -> tuple:
    """Run the tuning argument numerically at rates (R1, R2) and targets (r1, r2).

    For each t the coupled CEO instance is swept and h(t) is the config with
    the smallest H(X_t|U1,U2) among those meeting the rate constraints. The
    returned certificate mixes two such configs. Returns (result, mixture).
    """
    from .ceo_region import ceo_sweep
    sweep = sweep or mtsc_sweep(joint, grid)
    t_ = sweep.table
    feas = np.flatnonzero((t_["s1"] <= R1 + TOL) & (t_["s2"] <= R2 + TOL)
                          & (t_["s12"] <= R1 + R2 + TOL))
    if len(feas) == 0:
        raise ValueError("no swept config meets the rate constraints")
    d1, d2 = t_["d1"], t_["d2"]

    def h(t):
        ceo = ceo_sweep(coupled_ceo_instance(joint, t), grid).table
        return int(feas[np.argmin(ceo["D"][feas])])

    res = amplify_convexity(h, lambda k: d1[k], lambda k: d2[k], r1, r2, eps)
    mixture = AuxConfig.mixture([t_.config(res.x1), t_.config(res.x2)],
                                [res.theta, 1 - res.theta])
    return res, mixture
