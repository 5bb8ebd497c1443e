import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from logloss_rd.aux_search import AuxConfig
from logloss_rd.info_kernels import JointPmf, conditional_entropy, extend_with_aux, mutual_information
from logloss_rd.rate_polytope import (SetFunction, ceo_set_function, dominate_extreme_point,
                                      enumerate_extreme_points, greedy_extreme_point,
                                      in_polytope, is_supermodular, mask_to_set, set_to_mask)

FPLUS = SetFunction(2, [0.0, 0.0, 0.3, 0.5])


def test_greedy_hand_values():
    assert np.allclose(greedy_extreme_point(FPLUS, [0, 1]), [0.0, 0.5])
    assert np.allclose(greedy_extreme_point(FPLUS, [1, 0]), [0.2, 0.3])
    pts = enumerate_extreme_points(FPLUS)
    assert len(pts) == 2


def test_not_supermodular_witness():
    s = SetFunction(2, [0.0, 1.0, 1.0, 1.0])
    ok, pair = is_supermodular(s)
    assert not ok and set(pair) == {frozenset({0}), frozenset({1})}


def test_mask_round_trip():
    for mask in range(64):
        assert set_to_mask(mask_to_set(mask)) == mask


@st.composite
def supermodular(draw):
    """Sums of nonnegative multiples of |S|^2-style convex cardinality and modular terms."""
    m = draw(st.integers(1, 4))
    mod = draw(st.lists(st.floats(-1, 1), min_size=m, max_size=m))
    c = draw(st.floats(0, 1))
    vals = [sum(mod[i] for i in mask_to_set(k)) + c * bin(k).count("1") ** 2 for k in range(1 << m)]
    vals = np.array(vals) - vals[0]
    return SetFunction(m, vals)


@settings(max_examples=60, deadline=None)
@given(supermodular())
def test_greedy_points_match_vertex_oracle(s):
    assert is_supermodular(s)[0]
    got = [x for x, _ in enumerate_extreme_points(s)]
    ref = oracles.contra_polymatroid_vertices(s.values, s.m)
    assert len(got) == len(ref)
    for x in got:
        assert in_polytope(s, x)
        assert min(np.max(np.abs(x - y)) for y in ref) <= 1e-9


def test_ceo_set_function_properties():
    rng = np.random.default_rng(11)
    for _ in range(40):
        joint, D, p = oracles.random_ceo_extension(rng)
        f, fp = ceo_set_function(joint, D)
        assert is_supermodular(f)[0] and is_supermodular(fp)[0]
        assert fp.values[0] == 0.0
        for a in range(1 << f.m):
            for b in range(1 << f.m):
                if a & b == a:
                    assert f.values[a] <= f.values[b] + 1e-12


def test_ceo_set_function_loop_oracle():
    rng = np.random.default_rng(12)
    joint, D, p = oracles.random_ceo_extension(rng)
    f, _ = ceo_set_function(joint, D)
    m = f.m
    u = list(range(m + 2, 2 * m + 2))
    h_all = oracles.cond_entropy(p, [1], u + [0])
    for mask in range(1, 1 << m):
        I = sorted(mask_to_set(mask))
        rest = [u[i] for i in range(m) if i not in I] + [0]
        ref = oracles.cmi(p, [2 + i for i in I], [u[i] for i in I], rest) - (D - h_all)
        assert f.values[mask] == pytest.approx(ref, abs=1e-12)


def test_domination_single_encoder_endpoint():
    base = JointPmf.from_array(("X", "Y1"), [[0.4, 0.1], [0.1, 0.4]])
    cfg = AuxConfig.single([[0.9, 0.1], [0.2, 0.8]])
    ext = extend_with_aux(base, cfg, ["Y1"])
    D = conditional_entropy(ext, "X", ["U1", "Q"])
    _, fp = ceo_set_function(ext, D)
    v = greedy_extreme_point(fp, [0])
    assert v[0] == pytest.approx(mutual_information(ext, "U1", "Y1", "Q"), abs=1e-12)
    dom = dominate_extreme_point(ext, D, v, [0])
    assert dom.theta == pytest.approx(0.0, abs=1e-12)
    assert dom.distortion == pytest.approx(D, abs=1e-12)


def test_domination_on_random_instances():
    rng = np.random.default_rng(13)
    for _ in range(60):
        joint, D, _ = oracles.random_ceo_extension(rng)
        _, fp = ceo_set_function(joint, D)
        for v, order in enumerate_extreme_points(fp):
            dom = dominate_extreme_point(joint, D, v, order)
            assert 0.0 <= dom.theta < 1.0
            assert dom.distortion <= D + 1e-9
