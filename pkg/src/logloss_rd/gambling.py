"""Two gamblers with rate-limited side information betting on a pair of horse races.

The joint-wager doubling rate has a closed form. Splitting the bet into a
product of marginal bets costs Delta(R1, R2) = inf I(Y1;Y2|U1,U2,Q) over
auxiliaries meeting the Berger-Tung rate constraints, which is computed by
an LP over the time-sharing closure of the swept configs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .aux_search import AuxConfig, DominanceRegion, SearchGrid
from .ceo_region import _mixture
from .info_kernels import (JointPmf, PmfError, conditional_entropy, entropy,
                           extend_with_aux, mutual_information)
from .mtsc_region import MtscSweep, mtsc_sweep

RATE_TOL = 1e-9
DELTA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RaceSpec:
    joint: JointPmf
    odds: np.ndarray

    def __post_init__(self):
        if self.joint.names != ("Y1", "Y2"):
            raise PmfError("race outcomes must be a joint over (Y1, Y2)")
        o = np.asarray(self.odds, dtype=float)
        if o.shape != self.joint.shape:
            raise ValueError(f"odds shape {o.shape} does not match outcomes {self.joint.shape}")
        if not np.all(o > 0) or not np.all(np.isfinite(o)):
            raise ValueError("odds must be positive and finite")
        object.__setattr__(self, "odds", o)

    @property
    def expected_log_odds(self) -> float:
        p = self.joint.probs
        return float((p[p > 0] * np.log2(self.odds[p > 0])).sum())


@dataclass(frozen=True, eq=False)
class WagerPair:
    """Bets indexed by (q, u1, u2): joint b(y1,y2|.) and the marginal pair."""
    joint_bet: np.ndarray
    product_bet: tuple


@dataclass(frozen=True, eq=False)
class DoublingRates:
    W_jw: float
    W_pw: float
    delta: float
    witness: AuxConfig
    bets: WagerPair
    sum_rate_slack: float


def maximal_correlation(joint: JointPmf) -> float:
    """Second singular value of p(a,b)/sqrt(p(a)p(b)) after dropping null symbols."""
    if len(joint.axes) != 2:
        raise PmfError("maximal correlation needs a two-axis joint")
    p = np.asarray(joint.probs)
    pa, pb = p.sum(axis=1), p.sum(axis=0)
    p = p[pa > 0][:, pb > 0]
    pa, pb = pa[pa > 0], pb[pb > 0]
    if len(pa) < 2 or len(pb) < 2:
        return 0.0
    q = p / np.sqrt(np.outer(pa, pb))
    sv = np.linalg.svd(q, compute_uv=False)
    return float(min(max(sv[1], 0.0), 1.0))


def _standing(joint, R1, R2):
    h1, h2, h12 = entropy(joint, "Y1"), entropy(joint, "Y2"), entropy(joint, ["Y1", "Y2"])
    if R1 < 0 or R2 < 0 or R1 > h1 + RATE_TOL or R2 > h2 + RATE_TOL or R1 + R2 > h12 + RATE_TOL:
        raise ValueError(f"rates ({R1}, {R2}) outside R1<=H(Y1), R2<=H(Y2), R1+R2<=H(Y1,Y2)")
    return h1, h2, h12


class GapSolver:
    """Delta(R1, R2) as an LP over (I(Y1;U1|U2), I(Y2;U2|U1), I(U;Y), I(Y1;Y2|U)) points."""

    def __init__(self, joint: JointPmf, sweep: MtscSweep):
        self.joint = joint
        self.sweep = sweep
        t = sweep.table
        self.points = np.column_stack([t["s1"], t["s2"], t["s12"], t["delta"]])
        self.region = DominanceRegion(self.points)

    def solve(self, R1: float, R2: float):
        """(Delta, witness config, sum-rate slack).

        Among the Delta-optimal mixtures the witness maximizes I(Y1,Y2;U1,U2|Q),
        so its sum-rate slack is as small as the mesh allows.
        """
        val, w = self.region.minimize(3, [R1, R2, R1 + R2, None])
        if w is None:
            raise RuntimeError(f"no swept config meets rates ({R1}, {R2})")
        _, w2 = self.region.linear_min([0, 0, -1, 0], [R1, R2, R1 + R2, val + DELTA_TOL])
        if w2 is not None:
            w = w2
        labels, weights = self.region.support(w)
        cfg = _mixture(self.sweep.table, labels, weights)
        used = float(w @ self.region.points[:, 2])
        return val, cfg, R1 + R2 - used


_SOLVERS: dict = {}


def gap_solver(joint: JointPmf, grid: SearchGrid = SearchGrid(), threads: int = 1,
               cache=None) -> GapSolver:
    key = (joint.probs.tobytes(), joint.shape, grid, cache)
    if key not in _SOLVERS:
        _SOLVERS[key] = GapSolver(joint, mtsc_sweep(joint, grid, threads, cache))
    return _SOLVERS[key]


def optimal_bets(joint: JointPmf, cfg: AuxConfig) -> WagerPair:
    """b*(y1,y2|u,q) = p(y1,y2|u,q) and its two conditional marginals."""
    ext = extend_with_aux(joint, cfg).transpose(["Q", "U1", "U2", "Y1", "Y2"]).probs
    mass = ext.sum(axis=(3, 4), keepdims=True)
    n = ext.shape[3] * ext.shape[4]
    cond = np.where(mass > 0, ext / np.where(mass > 0, mass, 1.0), 1.0 / n)
    return WagerPair(cond, (cond.sum(axis=4), cond.sum(axis=3)))


def product_wager_rate(race: RaceSpec, cfg: AuxConfig, bets: WagerPair) -> float:
    """E log2(b1(Y1|U,Q) b2(Y2|U,Q) o(Y1,Y2)) under the witness joint."""
    ext = extend_with_aux(race.joint, cfg).transpose(["Q", "U1", "U2", "Y1", "Y2"]).probs
    b1, b2 = bets.product_bet
    payoff = b1[..., :, None] * b2[..., None, :] * race.odds
    s = ext > 0
    return float((ext[s] * np.log2(payoff[s])).sum())


def doubling_rates(race: RaceSpec, R1: float, R2: float, grid: SearchGrid = SearchGrid(),
                   solver: GapSolver | None = None) -> DoublingRates:
    joint = race.joint
    h1, h2, h12 = _standing(joint, R1, R2)
    w_jw = race.expected_log_odds + min(R1 - conditional_entropy(joint, "Y1", "Y2"),
                                         R2 - conditional_entropy(joint, "Y2", "Y1"),
                                         R1 + R2 - h12)
    solver = solver or gap_solver(joint, grid)
    # Delta never sees the odds
    delta, cfg, slack = solver.solve(R1, R2)
    return DoublingRates(w_jw, w_jw - delta, delta, cfg, optimal_bets(joint, cfg), slack)


def sum_rate_tightness(race: RaceSpec, R1: float, R2: float, grid: SearchGrid = SearchGrid(),
                       solver: GapSolver | None = None) -> float:
    """R1 + R2 - I(Y1,Y2;U1,U2|Q) at the Delta-optimal witness."""
    _standing(race.joint, R1, R2)
    solver = solver or gap_solver(race.joint, grid)
    _, cfg, _ = solver.solve(R1, R2)
    ext = extend_with_aux(race.joint, cfg)
    return R1 + R2 - mutual_information(ext, ["Y1", "Y2"], ["U1", "U2"], "Q")


def rate_lattice(joint: JointPmf, step: float):
    """Rate pairs on a step lattice inside the standing assumption."""
    h1, h2, h12 = entropy(joint, "Y1"), entropy(joint, "Y2"), entropy(joint, ["Y1", "Y2"])
    n1, n2 = int(np.floor(h1 / step + 1e-9)), int(np.floor(h2 / step + 1e-9))
    out = []
    for i, j in itertools.product(range(n1 + 1), range(n2 + 1)):
        r1, r2 = round(i * step, 12), round(j * step, 12)
        if r1 + r2 <= h12 + 1e-12:
            out.append((r1, r2))
    return out


@dataclass(frozen=True)
class RhoReport:
    max_violation: float
    worst_rates: tuple
    rho: float


def rho_bound_check(race: RaceSpec, step: float = 0.05, grid: SearchGrid = SearchGrid(),
                    solver: GapSolver | None = None) -> RhoReport:
    """max over the lattice of (I(Y1;Y2) - rho_m^2 (R1+R2)) - Delta(R1, R2)."""
    joint = race.joint
    solver = solver or gap_solver(joint, grid)
    rho = maximal_correlation(joint)
    info = mutual_information(joint, "Y1", "Y2")
    worst, where = -np.inf, None
    for r1, r2 in rate_lattice(joint, step):
        d, _, _ = solver.solve(r1, r2)
        v = info - rho ** 2 * (r1 + r2) - d
        if v > worst:
            worst, where = v, (r1, r2)
    return RhoReport(float(worst), where, rho)


@dataclass(frozen=True)
class AuditReport:
    monotone_violation: float
    convexity_violation: float
    values: dict


def monotone_convexity_audit(race: RaceSpec, step: float = 0.1, grid: SearchGrid = SearchGrid(),
                             solver: GapSolver | None = None) -> AuditReport:
    """Worst increase of Delta along a coordinate step and worst midpoint-convexity excess."""
    solver = solver or gap_solver(race.joint, grid)
    pts = rate_lattice(race.joint, step)
    key = lambda r: (round(r[0] / step), round(r[1] / step))
    vals = {key(r): solver.solve(*r)[0] for r in pts}
    mono = conv = 0.0
    for (i, j), v in vals.items():
        for di, dj in ((1, 0), (0, 1)):
            w = vals.get((i + di, j + dj))
            if w is not None:
                mono = max(mono, w - v)
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
            a, b = vals.get((i - di, j - dj)), vals.get((i + di, j + dj))
            if a is not None and b is not None:
                conv = max(conv, v - 0.5 * (a + b))
    return AuditReport(mono, conv, vals)
