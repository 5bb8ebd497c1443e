"""Supermodular set functions and the vertices of their rate polytopes.

A set function on {0, ..., m-1} is stored as a table indexed by bitmask. Its
polytope is P(s) = {x : sum_{i in T} x_i >= s(T) for all T}; for supermodular
s every vertex comes from the greedy rule along some ordering.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_ENCODERS = 12
MAX_ENUMERATE = 8
ZERO_RATE = 1e-9


@dataclass(frozen=True, eq=False)
class SetFunction:
    m: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.m <= MAX_ENCODERS:
            raise ValueError(f"number of encoders must be in 1..{MAX_ENCODERS}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (1 << self.m,):
            raise ValueError(f"expected {1 << self.m} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, m: int, fn) -> "SetFunction":
        """Tabulate fn(frozenset) over all subsets."""
        return cls(m, np.array([fn(mask_to_set(mask)) for mask in range(1 << m)]))

    def __call__(self, subset) -> float:
        return float(self.values[set_to_mask(subset)])

    def positive_part(self) -> "SetFunction":
        return SetFunction(self.m, np.maximum(self.values, 0.0))


def set_to_mask(subset) -> int:
    mask = 0
    for i in subset:
        mask |= 1 << int(i)
    return mask


def mask_to_set(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def is_supermodular(s: SetFunction, tol: float = 1e-9):
    """(True, None) or (False, (S, T)) with s(S)+s(T) > s(S&T)+s(S|T)+tol.

    Checks the local form s(S+i)+s(S+j) <= s(S)+s(S+i+j), which is
    equivalent to the lattice inequality for every pair.
    """
    v = s.values
    for base in range(1 << s.m):
        free = [i for i in range(s.m) if not base >> i & 1]
        for i, j in itertools.combinations(free, 2):
            a, b = base | 1 << i, base | 1 << j
            if v[a] + v[b] > v[base] + v[a | b] + tol:
                return False, (mask_to_set(a), mask_to_set(b))
    return True, None


def greedy_extreme_point(s: SetFunction, order: Sequence[int]) -> np.ndarray:
    """x[e_k] = s({e_1..e_k}) - s({e_1..e_{k-1}})."""
    order = [int(e) for e in order]
    if sorted(order) != list(range(s.m)):
        raise ValueError(f"{order} is not a permutation of 0..{s.m - 1}")
    x = np.zeros(s.m)
    prev = 0
    for e in order:
        cur = prev | 1 << e
        x[e] = s.values[cur] - s.values[prev]
        prev = cur
    return x


def enumerate_extreme_points(s: SetFunction, tol: float = 1e-9):
    """Distinct greedy vertices over all orderings as a list of (point, ordering)."""
    if s.m > MAX_ENUMERATE:
        raise ValueError(f"vertex enumeration is limited to m <= {MAX_ENUMERATE}")
    found = []
    for order in itertools.permutations(range(s.m)):
        x = greedy_extreme_point(s, order)
        if not any(np.max(np.abs(x - y)) <= tol for y, _ in found):
            found.append((x, order))
    return found


def in_polytope(s: SetFunction, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    for mask in range(1, 1 << s.m):
        if sum(x[i] for i in mask_to_set(mask)) < s.values[mask] - tol:
            return False
    return True


# ------------------------------------------------ CEO set function and domination

def _u(idx):
    return [f"U{i + 1}" for i in sorted(idx)]


def _y(idx):
    return [f"Y{i + 1}" for i in sorted(idx)]


def _encoders(joint) -> int:
    return sum(1 for n in joint.names if n.startswith("U"))


def ceo_set_function(joint, D: float):
    """(f, f+) with f(I) = I(Y_I;U_I|U_{I^c},Q) - (D - H(X|U_1..U_m,Q)).

    `joint` has axes (Q, X, Y1..Ym, U1..Um) as produced by extend_with_aux.
    """
    from .info_kernels import conditional_entropy, mutual_information
    if D < 0:
        raise ValueError("distortion must be nonnegative")
    m = _encoders(joint)
    everything = set(range(m))
    h_all = conditional_entropy(joint, "X", _u(everything) + ["Q"])
    excess = D - h_all

    def f(I):
        if not I:
            return -excess
        rest = _u(everything - I) + ["Q"]
        return mutual_information(joint, _y(I), _u(I), rest) - excess

    fs = SetFunction.from_callable(m, f)
    return fs, fs.positive_part()


@dataclass(frozen=True)
class Domination:
    position: int | None
    encoder: int | None
    theta: float
    distortion: float


def dominate_extreme_point(joint, D: float, vertex, order) -> Domination:
    """Time-share two Berger-Tung points so their distortion is at most D at rate `vertex`.

    j is the first position in `order` whose rate exceeds 1e-9. With
    theta = -f({e_1..e_{j-1}}) / I(Y_j;U_j|U_{j+1..m},Q) the scheme that drops
    encoders e_1..e_{j-1} and sends e_j only a (1-theta) fraction of the time
    reaches distortion (1-theta) H(X|U_j..U_m,Q) + theta H(X|U_{j+1}..U_m,Q).
    """
    from .info_kernels import conditional_entropy, mutual_information
    m = _encoders(joint)
    order = [int(e) for e in order]
    h_all = conditional_entropy(joint, "X", _u(range(m)) + ["Q"])
    if D < h_all - 1e-9:
        raise ValueError(f"D={D} is below H(X|U,Q)={h_all}")
    f, _ = ceo_set_function(joint, D)
    vertex = np.asarray(vertex, dtype=float)
    pos = next((k for k in range(m) if vertex[order[k]] > ZERO_RATE), None)
    if pos is None:
        return Domination(None, None, 0.0, conditional_entropy(joint, "X", ["Q"]))
    e = order[pos]
    later = order[pos + 1:]
    denom = mutual_information(joint, _y([e]), _u([e]), _u(later) + ["Q"])
    prefix = f(order[:pos])
    theta = -prefix / denom if denom > 0 else 0.0
    if -1e-12 < theta < 0:
        theta = 0.0
    h_with = conditional_entropy(joint, "X", _u([e] + later) + ["Q"])
    h_without = conditional_entropy(joint, "X", _u(later) + ["Q"])
    return Domination(pos, e, theta, (1 - theta) * h_with + theta * h_without)
