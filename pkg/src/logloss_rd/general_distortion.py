"""Relating a finite distortion measure d(y, yhat) to log loss.

Each hard reproduction yhat is lifted to the soft reproduction
q(y) = 2^{-d(y,yhat)} / sum_y' 2^{-d(y',yhat)}, whose log loss is d plus the
constant beta(yhat) = log2 sum_y 2^{-d(y,yhat)}. For binary Hamming distortion
this bounds how far the log-loss region can be from the Hamming region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .aux_search import AuxConfig, SearchGrid, channel_mesh, config_count
from .info_kernels import (Alphabet, JointPmf, PmfError, SoftReproduction,
                           conditional_entropy, extend_with_aux, mutual_information)


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    """d[y, yhat] >= 0; +inf marks forbidden pairs."""
    d: np.ndarray
    source: Alphabet = None
    repro: Alphabet = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or np.any(np.isnan(d)) or np.any(d < 0):
            raise ValueError("distortion must be a nonnegative matrix")
        if not np.all(np.isfinite(d).any(axis=0)):
            raise ValueError("every reproduction symbol needs a finite entry")
        object.__setattr__(self, "d", d)
        if self.source is None:
            object.__setattr__(self, "source", Alphabet("Y", d.shape[0]))
        if self.repro is None:
            object.__setattr__(self, "repro", Alphabet("Yhat", d.shape[1]))


def hamming(alpha: float = 1.0, n: int = 2) -> DistortionMatrix:
    return DistortionMatrix(alpha * (1.0 - np.eye(n)))


def erasure() -> DistortionMatrix:
    """Binary erasure measure: reproductions 0, 1, e with d(y, e) = 1."""
    inf = float("inf")
    return DistortionMatrix(np.array([[0.0, inf, 1.0], [inf, 0.0, 1.0]]))


def beta_of_repro(dm: DistortionMatrix, yhat: int) -> float:
    """log2 sum_y 2^{-d(y, yhat)}."""
    col = dm.d[:, int(yhat)]
    return math.log2(math.fsum(2.0 ** -float(v) for v in col if math.isfinite(v)))


def log_loss_lift(dm: DistortionMatrix, yhat: int) -> SoftReproduction:
    col = dm.d[:, int(yhat)]
    w = np.array([2.0 ** -float(v) if math.isfinite(v) else 0.0 for v in col])
    return SoftReproduction(w / math.fsum(w))


def outer_bound_shift(joint: JointPmf, cfg: AuxConfig, beta1: float, beta2: float) -> dict:
    """Distortion lower bounds H(Y_i|U1,U2,Q) - beta_i with the Berger-Tung corner."""
    ext = extend_with_aux(joint, cfg)
    u = ["U1", "U2", "Q"]
    s1 = mutual_information(ext, "Y1", "U1", ["U2", "Q"])
    s12 = mutual_information(ext, ["Y1", "Y2"], ["U1", "U2"], "Q")
    return {
        "D1": conditional_entropy(ext, "Y1", u) - beta1,
        "D2": conditional_entropy(ext, "Y2", u) - beta2,
        "R1": s1,
        "R2": s12 - s1,
    }


def map_reproduction_distortion(joint: JointPmf, cfg: AuxConfig, alpha: float,
                                source: int = 1) -> float:
    """alpha * P(MAP estimate of Y_i from (U1,U2,Q) is wrong).

    Ties go to the lower symbol, which does not change the error probability.
    """
    name = f"Y{source}"
    if joint.size(name) != 2:
        raise PmfError("MAP audit needs a binary source")
    ext = extend_with_aux(joint, cfg)
    pj = ext.marginal(["Q", "U1", "U2", name]).probs
    val = alpha * float(pj.min(axis=3).sum())
    bound = 0.5 * alpha * conditional_entropy(ext, name, ["U1", "U2", "Q"])
    assert val <= bound + 1e-9, (val, bound)
    return val


def hamming_gap_bound(alpha, H):
    """(1/2 - 1/alpha) H + log2(1 + 2^-alpha) / alpha: the 1-scaled Hamming gap bound."""
    alpha = np.asarray(alpha, dtype=float)
    return (0.5 - 1.0 / alpha) * H + np.log2(1.0 + 2.0 ** -alpha) / alpha


def _l(a):
    return math.log2(1.0 + 2.0 ** -a)


def _dl(a):
    return -(2.0 ** -a) / (1.0 + 2.0 ** -a)


def best_alpha(H: float) -> float:
    """argmin over alpha of hamming_gap_bound(alpha, H) for 0 < H < 1."""
    # d/dalpha of the gap has the sign of H - l(a) + a l'(a), increasing in a
    return brentq(lambda a: H - _l(a) + a * _dl(a), 1e-9, 200.0, xtol=1e-15)


@dataclass(frozen=True)
class Saddle:
    alpha: float
    H: float
    value: float
    minimax_alpha: float
    minimax_value: float


def saddle_evaluation() -> Saddle:
    """max over H of min over alpha of the gap bound, and min over alpha of max over H.

    By the envelope theorem d/dH min_alpha = 1/2 - 1/alpha*(H), so the outer
    maximum sits where the inner argmin equals 2. The bound is affine in H,
    so the max over H in [0, 1] is attained at an endpoint.
    """
    H = brentq(lambda h: best_alpha(h) - 2.0, 1e-6, 1 - 1e-6, xtol=1e-15)
    a = best_alpha(H)
    value = float(hamming_gap_bound(a, H))
    a2 = brentq(lambda x: float(hamming_gap_bound(x, 0.0) - hamming_gap_bound(x, 1.0)), 0.5, 10.0, xtol=1e-15)
    v2 = float(max(hamming_gap_bound(a2, 0.0), hamming_gap_bound(a2, 1.0)))
    return Saddle(a, H, value, a2, v2)


@dataclass(frozen=True, eq=False)
class GapAudit:
    worst_gap: float
    argmax_config: AuxConfig
    argmax_source: int
    samples: int
    saddle: Saddle


def hamming_gap_audit(joint: JointPmf, grid: SearchGrid = SearchGrid(), samples: int = 10_000,
                      seed: int = 0) -> GapAudit:
    """Worst 1-scaled Hamming gap between the MAP scheme and the alpha=2 outer bound.

    For each sampled mesh config and each source, the achieved distortion is
    P(MAP error) and the outer bound is (H(Y_i|U1,U2) - log2(5/4)) / 2.
    """
    if joint.shape != (2, 2):
        raise PmfError("the Hamming audit needs binary sources")
    rng = np.random.default_rng(seed)
    meshes = [channel_mesh(2, 2, grid.K) for _ in range(2)]
    rows = rng.integers(0, config_count([2, 2], grid), size=samples)
    i1, i2 = np.unravel_index(rows, (len(meshes[0]), len(meshes[1])))
    p = np.einsum("ab,Zau,Zbv->Zabuv", joint.probs, meshes[0][i1], meshes[1][i2])
    beta = math.log2(1.25)
    gaps = []
    for axis in (2, 1):  # sum out the other source
        pj = p.sum(axis=axis)  # (Z, y, u1, u2)
        pu = pj.sum(axis=1)
        err = pj.min(axis=1).sum(axis=(1, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(pj > 0, pj * np.log2(np.where(pj > 0, pj, 1.0)), 0.0).sum(axis=(1, 2, 3))
            tu = np.where(pu > 0, pu * np.log2(np.where(pu > 0, pu, 1.0)), 0.0).sum(axis=(1, 2))
        H = np.maximum(tu - t, 0.0)
        gaps.append(err - 0.5 * (H - beta))
    gaps = np.stack(gaps)
    src, k = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
    cfg = AuxConfig.single(meshes[0][i1[k]], meshes[1][i2[k]])
    return GapAudit(float(gaps[src, k]), cfg, int(src) + 1, samples, saddle_evaluation())
