"""Entropy, mutual information and log-loss kernels on finite joint pmfs.

All quantities are in bits. A `JointPmf` is a dense row-major tensor whose
axes carry names, so conditional quantities are requested by axis name:

    >>> p = dsbs(0.1)
    >>> round(conditional_entropy(p, "Y1", "Y2"), 6)
    0.468996
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-9
NEG_TOL = 1e-12


class PmfError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    name: str
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise PmfError(f"alphabet {self.name!r} must be non-empty")


def _clean(probs):
    probs = np.asarray(probs, dtype=float)
    if not np.all(np.isfinite(probs)):
        raise PmfError("pmf has non-finite entries")
    if probs.size and probs.min() < -NEG_TOL:
        raise PmfError(f"pmf has negative entry {probs.min():.3g}")
    probs = np.where(probs < 0, 0.0, probs)
    total = probs.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise PmfError(f"pmf sum {float(total)!r} differs from 1 by more than {SUM_TOL}")
    return probs


@dataclass(frozen=True, eq=False)
class JointPmf:
    axes: tuple
    probs: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise PmfError(f"duplicate axis names {names}")
        probs = _clean(self.probs).reshape([a.size for a in axes])
        probs.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_array(cls, names: Sequence[str], probs) -> "JointPmf":
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != len(names):
            raise PmfError(f"{len(names)} names for a {probs.ndim}-d array")
        return cls(tuple(Alphabet(n, s) for n, s in zip(names, probs.shape)), probs)

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    @property
    def shape(self) -> tuple:
        return self.probs.shape

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise PmfError(f"no axis named {name!r}; have {self.names}") from None

    def size(self, name: str) -> int:
        return self.axes[self.axis(name)].size

    def marginal(self, names) -> "JointPmf":
        """Marginal on `names`, in the order given."""
        names = _as_names(names)
        idx = [self.axis(n) for n in names]
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        m = self.probs.sum(axis=drop)
        kept = sorted(idx)
        m = np.moveaxis(m, [kept.index(i) for i in idx], range(len(idx)))
        return JointPmf(tuple(self.axes[i] for i in idx), m)

    def transpose(self, names) -> "JointPmf":
        names = _as_names(names)
        if sorted(names) != sorted(self.names):
            raise PmfError("transpose needs a permutation of the axes")
        return self.marginal(names)

    def to_json(self) -> str:
        return json.dumps({
            "axes": [{"name": a.name, "size": a.size} for a in self.axes],
            "probs": [float(v) for v in self.probs.ravel()],
        })

    @classmethod
    def from_json(cls, text: str) -> "JointPmf":
        try:
            obj = json.loads(text)
            axes = tuple(Alphabet(str(a["name"]), int(a["size"])) for a in obj["axes"])
            flat = np.asarray(obj["probs"], dtype=float)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise PmfError(f"malformed pmf json: {exc}") from None
        n = int(np.prod([a.size for a in axes]))
        if flat.size != n:
            raise PmfError(f"expected {n} probabilities, got {flat.size}")
        return cls(axes, flat.reshape([a.size for a in axes]))


def _as_names(names) -> list:
    if names is None:
        return []
    if isinstance(names, str):
        return [names]
    return list(names)


def plogp_sum(p) -> float:
    """-sum p log2 p with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def entropy(joint: JointPmf, names=None) -> float:
    names = _as_names(names) or list(joint.names)
    return plogp_sum(joint.marginal(names).probs)


def conditional_entropy(joint: JointPmf, target, given=None) -> float:
    target, given = _as_names(target), _as_names(given)
    both = target + [n for n in given if n not in target]
    h = entropy(joint, both)
    if given:
        h -= entropy(joint, given)
    return max(h, 0.0)


def mutual_information(joint: JointPmf, a, b, given=None) -> float:
    """I(A;B|C); clamped at zero so round-off never reports negative information."""
    a, b, given = _as_names(a), _as_names(b), _as_names(given)
    val = conditional_entropy(joint, a, given) - conditional_entropy(joint, a, b + given)
    return max(val, 0.0)


def kl_divergence(p, q) -> float:
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise PmfError("kl_divergence needs equal shapes")
    s = p > 0
    if np.any(q[s] <= 0):
        return float("inf")
    return float((p[s] * np.log2(p[s] / q[s])).sum())


def binary_entropy(t: float) -> float:
    return plogp_sum([t, 1.0 - t])


def log_loss(y: int, reproduction) -> float:
    """Self-information loss log2(1/q(y)) of a soft reproduction q."""
    q = float(np.asarray(reproduction, dtype=float)[y])
    return float("inf") if q <= 0 else -float(np.log2(q))


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix W[y, u] = p(u|y)."""
    matrix: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2:
            raise PmfError("channel must be a matrix")
        if w.min() < -NEG_TOL or np.any(np.abs(w.sum(axis=1) - 1) > SUM_TOL):
            raise PmfError("channel rows must be pmfs")
        w = np.where(w < 0, 0.0, w)
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)


@dataclass(frozen=True, eq=False)
class SoftReproduction:
    """A pmf over the source alphabet used as a log-loss reconstruction."""
    probs: np.ndarray

    def __post_init__(self):
        p = _clean(self.probs)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def loss(self, y: int) -> float:
        return log_loss(y, self.probs)


def extend_with_aux(base: JointPmf, cfg, observed: Sequence[str] | None = None) -> JointPmf:
    """Joint of (Q, base axes, U1..Um) where U_i is drawn from channel i given observed[i] and Q.

    Q is independent of the base source. The result has axes
    ("Q", *base.names, "U1", ..., "Um").
    """
    m = cfg.num_encoders
    observed = list(observed) if observed is not None else [f"Y{i + 1}" for i in range(m)]
    if len(observed) != m:
        raise PmfError(f"{m} channels but {len(observed)} observed axes")
    for i, name in enumerate(observed):
        if cfg.channels[i].shape[1] != base.size(name):
            raise PmfError(f"channel {i + 1} input size does not match axis {name!r}")
    nb = len(base.axes)
    letters = "abcdefghijklmnop"
    base_sub = letters[:nb]
    u_sub = "rstuvwxyz"[:m]
    ops, subs = [cfg.q_weights, base.probs], ["q", base_sub]
    for i, name in enumerate(observed):
        ops.append(cfg.channels[i])
        subs.append("q" + base_sub[base.axis(name)] + u_sub[i])
    out = np.einsum(",".join(subs) + "->q" + base_sub + u_sub, *ops)
    axes = (Alphabet("Q", cfg.q_size),) + base.axes + tuple(
        Alphabet(f"U{i + 1}", cfg.channels[i].shape[2]) for i in range(m))
    return JointPmf(axes, out)


# Batched kernels: leading axis indexes a batch of joints of identical shape.

def batch_entropy(p: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Entropy of the marginal on event axes `keep` for each joint in the batch.

    `p` has shape (B, *event_shape); `keep` indexes event axes (0-based).
    """
    drop = tuple(1 + i for i in range(p.ndim - 1) if i not in keep)
    m = p.sum(axis=drop) if drop else p
    m = m.reshape(m.shape[0], -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(m > 0, m * np.log2(np.where(m > 0, m, 1.0)), 0.0)
    return -t.sum(axis=1)
