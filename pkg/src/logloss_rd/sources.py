"""Named source generators used by the CLI and tests."""
from __future__ import annotations

import numpy as np

from .info_kernels import JointPmf, PmfError


def dsbs(alpha: float) -> JointPmf:
    """Doubly symmetric binary source: Y1 ~ Bern(1/2), Y2 = Y1 xor Bern(alpha)."""
    a = float(alpha)
    p = 0.5 * np.array([[1 - a, a], [a, 1 - a]])
    return JointPmf.from_array(("Y1", "Y2"), p)


def bsc_ceo(alpha: float, m: int = 2) -> JointPmf:
    """X ~ Bern(1/2) observed by m independent BSC(alpha) links."""
    a = float(alpha)
    bsc = np.array([[1 - a, a], [a, 1 - a]])
    p = np.array([0.5, 0.5])
    letters = "bcdefgh"[:m]
    p = np.einsum("a," + ",".join("a" + c for c in letters) + "->a" + letters, p, *[bsc] * m)
    return JointPmf.from_array(("X",) + tuple(f"Y{i + 1}" for i in range(m)), p)


def uniform(n: int) -> JointPmf:
    """Independent uniform pair on an n x n alphabet."""
    return JointPmf.from_array(("Y1", "Y2"), np.full((n, n), 1.0 / (n * n)))


GENERATORS = {"dsbs": dsbs, "bsc-ceo": bsc_ceo, "uniform": uniform}


def parse_source(text: str) -> JointPmf:
    """Parse `name:param`, e.g. `dsbs:0.1`, `bsc-ceo:0.25`, `uniform:3`."""
    name, _, arg = text.partition(":")
    if name not in GENERATORS or not arg:
        raise PmfError(f"unknown generator {text!r}; use one of {sorted(GENERATORS)} as name:param")
    if name == "uniform":
        return uniform(int(arg))
    return GENERATORS[name](float(arg))


def random_joint(rng, shape, names=("Y1", "Y2")) -> JointPmf:
    p = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    return JointPmf.from_array(names, p)
