import numpy as np
import pytest

import oracles
from logloss_rd import sources
from logloss_rd.aux_search import AuxConfig, SearchGrid, enumerate_configs
from logloss_rd.ceo_region import (CeoInstance, berger_tung_function, ceo_curve, ceo_sweep,
                                   evaluate_ceo_point, min_kl, outer_bound_slacks,
                                   product_instance, sw_minus_d_membership)
from logloss_rd.info_kernels import JointPmf, PmfError, extend_with_aux
from logloss_rd.rate_polytope import in_polytope


def test_markov_check():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 0.25
    p[0, 0, 1] = p[1, 1, 0] = 0.25
    CeoInstance(JointPmf.from_array(("X", "Y1", "Y2"), p))
    q = np.full((2, 2, 2), 0.0)
    q[0, 0, 0] = q[0, 1, 1] = q[1, 0, 1] = q[1, 1, 0] = 0.25
    with pytest.raises(PmfError):
        CeoInstance(JointPmf.from_array(("X", "Y1", "Y2"), q))


def test_constant_and_identity_endpoints():
    inst = CeoInstance(sources.bsc_ceo(0.25))
    const = AuxConfig.single([[1, 0], [1, 0]], [[1, 0], [1, 0]])
    pt = evaluate_ceo_point(inst, const)
    assert pt.distortion == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(pt.rates, 0.0)
    ident = AuxConfig.single(np.eye(2), np.eye(2))
    pt = evaluate_ceo_point(inst, ident)
    assert pt.distortion == pytest.approx(oracles.bsc_ceo_posterior_entropy(0.25), abs=1e-12)


def test_batch_route_matches_scalar_route():
    inst = CeoInstance(sources.bsc_ceo(0.1))
    sweep = ceo_sweep(inst, SearchGrid(3))
    t = sweep.table
    for row in range(0, len(t), 7):
        pt = evaluate_ceo_point(inst, t.config(row))
        assert t["D"][row] == pytest.approx(pt.distortion, abs=1e-12)
        assert t["s1"][row] == pytest.approx(pt.rates[0], abs=1e-12)
        assert t["s12"][row] == pytest.approx(sum(pt.rates), abs=1e-12)
        corners = {tuple(np.round(c, 9)) for c in pt.corners}
        assert (round(t["s1"][row], 9), round(t["s12"][row] - t["s1"][row], 9)) in corners
        assert (round(t["s12"][row] - t["s2"][row], 9), round(t["s2"][row], 9)) in corners


def test_min_kl_against_full_lp():
    """epsilon*(0.5, 0.5) at alpha = 0.1 from an LP over every scalar-evaluated corner."""
    alpha, K = 0.1, 4
    inst = CeoInstance(sources.bsc_ceo(alpha))
    pts = []
    for cfg in enumerate_configs([2, 2], SearchGrid(K)):
        pt = evaluate_ceo_point(inst, cfg)
        for c in pt.corners:
            pts.append([c[0], c[1], pt.distortion])
    ref = oracles.lp_min_over_hull(pts, 2, [0.5, 0.5, None]) - \
        oracles.bsc_ceo_posterior_entropy(alpha)
    got = min_kl(inst, 0.5, 0.5, SearchGrid(K))
    assert got == pytest.approx(ref, abs=1e-9)


def test_slice_curve_is_exact_cut_and_below_max_mode():
    inst = CeoInstance(sources.bsc_ceo(0.25))
    sweep = ceo_sweep(inst, SearchGrid(8))
    exact = sweep.curve("slice")
    coarse = sweep.curve("max")
    rs = np.linspace(0, 1.2, 25)
    for r in rs:
        lp, _ = sweep.min_distortion(r, r)
        assert exact(r) == pytest.approx(lp, abs=1e-9)
    assert np.all(exact(rs) <= coarse(rs) + 1e-12)


def test_curve_witnesses_reach_their_vertices():
    inst = CeoInstance(sources.bsc_ceo(0.1))
    curve = ceo_curve(inst, SearchGrid(6))
    for (r, d), cfg in zip(curve.vertices, curve.witnesses):
        pt = evaluate_ceo_point(inst, cfg)
        assert pt.distortion == pytest.approx(d, abs=1e-9)
        ext = extend_with_aux(inst.joint, cfg, inst.observed)
        assert in_polytope(berger_tung_function(ext, 2), [r, r], tol=1e-9)
        slacks = outer_bound_slacks(inst, cfg, [r, r], d)
        assert min(slacks.values()) >= -1e-9


def test_product_instance_matches_sw_minus_d():
    joint = sources.random_joint(np.random.default_rng(2), (2, 2))
    sweep = ceo_sweep(product_instance(joint), SearchGrid(6))
    for r1 in np.arange(0, 1.01, 0.25):
        for r2 in np.arange(0, 1.01, 0.25):
            for d in np.arange(0, 2.0, 0.25):
                assert sweep.region.contains([r1, r2, d]) == \
                    sw_minus_d_membership(joint, r1, r2, d, tol=1e-9)


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        min_kl(CeoInstance(sources.bsc_ceo(0.1)), -0.1, 0.2, SearchGrid(2))
