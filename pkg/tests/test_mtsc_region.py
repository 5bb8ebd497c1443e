import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from logloss_rd import sources
from logloss_rd.aux_search import AuxConfig, SearchGrid
from logloss_rd.info_kernels import PmfError
from logloss_rd.mtsc_region import (ConstructionError, CouplingParam, PreconditionError,
                                    _quantities, amplify_convexity, amplify_sampled,
                                    bt_vertex_construction, coupled_ceo_instance,
                                    evaluate_mtsc_point, list_decoding_relabel,
                                    mtsc_membership, mtsc_sweep, sandwich_report,
                                    seq_outer_region_point, tuning_coupling_check)


def random_cfg(rng, nq=None):
    nq = nq or int(rng.integers(1, 3))
    return AuxConfig(rng.dirichlet(np.ones(nq)),
                     (oracles.random_channel(rng, nq, 2, int(rng.integers(2, 4))),
                      oracles.random_channel(rng, nq, 2, int(rng.integers(2, 4)))))


def test_point_matches_loop_oracle():
    rng = np.random.default_rng(1)
    joint = sources.random_joint(rng, (2, 2))
    cfg = random_cfg(rng, 2)
    pt = evaluate_mtsc_point(joint, cfg)
    p = oracles.extend(joint.probs, cfg.q_weights, list(cfg.channels), [0, 1])
    # axes: Q, Y1, Y2, U1, U2
    assert pt.D1 == pytest.approx(oracles.cond_entropy(p, [1], [0, 3, 4]), abs=1e-12)
    assert pt.D2 == pytest.approx(oracles.cond_entropy(p, [2], [0, 3, 4]), abs=1e-12)
    assert pt.R1 == pytest.approx(oracles.cmi(p, [1], [3], [0, 4]), abs=1e-12)
    assert pt.R1 + pt.R2 == pytest.approx(oracles.cmi(p, [1, 2], [3, 4], [0]), abs=1e-12)


def test_batch_route_matches_scalar_route():
    joint = sources.random_joint(np.random.default_rng(2), (2, 2))
    t = mtsc_sweep(joint, SearchGrid(3)).table
    for row in range(0, len(t), 5):
        q = _quantities(joint, t.config(row))
        for key in ("s1", "s2", "s12", "d1", "d2", "h1_u1", "h1_u2", "i2_given_y1", "delta"):
            assert t[key][row] == pytest.approx(q[key], abs=1e-12), key


def test_membership_and_relabel():
    joint = sources.dsbs(0.1)
    sweep = mtsc_sweep(joint, SearchGrid(4))
    ok, w = mtsc_membership(joint, [1.0, 1.0, 0.0, 0.0], sweep=sweep)
    assert ok and w is not None
    pt = evaluate_mtsc_point(joint, w)
    assert pt.D1 <= 1e-9 and pt.D2 <= 1e-9
    assert not mtsc_membership(joint, [0.1, 0.1, 0.1, 0.1], sweep=sweep)[0]
    assert list_decoding_relabel(1.0, 1.0, 0.0, 0.0, joint, sweep=sweep)
    with pytest.raises(PmfError):
        mtsc_sweep(sources.bsc_ceo(0.1), SearchGrid(2))


def test_inner_points_satisfy_outer_bounds():
    rng = np.random.default_rng(3)
    joint = sources.random_joint(rng, (2, 2))
    for _ in range(50):
        cfg = random_cfg(rng)
        pt = evaluate_mtsc_point(joint, cfg)
        ob = seq_outer_region_point(joint, cfg, pt.D1)
        for c in pt.corners:
            assert min(ob.slacks(c[0], c[1], pt.D1, pt.D2).values()) >= -1e-9


def test_sandwich_small_mesh():
    rep = sandwich_report(mtsc_sweep(sources.dsbs(0.2), SearchGrid(6)), step=0.25)
    assert rep["max_boundary_gap_bits"] <= 1e-9
    assert rep["disagreements_outside_band"] == 0


def test_bt_vertex_construction_random():
    rng = np.random.default_rng(4)
    for _ in range(200):
        joint = sources.random_joint(rng, (2, 2))
        cfg = random_cfg(rng)
        q = _quantities(joint, cfg)
        D1 = q["d1"] + rng.uniform() * max(q["h1"] - q["d1"], 0.0)
        D2 = D1 + q["d2"] - q["d1"] + rng.exponential(0.1)
        for case in bt_vertex_construction(joint, cfg, D1, D2):
            assert 0.0 <= case.theta <= 1.0
            assert case.D1 <= D1 + 1e-9 and case.D2 <= D2 + 1e-9
            # the time-shared scheme spends exactly the vertex rates
            assert np.allclose(case.scheme_rates, case.rates, atol=1e-9)


def test_bt_vertex_endpoints():
    joint = sources.dsbs(0.2)
    cfg = AuxConfig.single([[0.9, 0.1], [0.3, 0.7]], [[0.8, 0.2], [0.1, 0.9]])
    q = _quantities(joint, cfg)
    first, _ = bt_vertex_construction(joint, cfg, q["d1"], q["d2"])
    assert first.label == "1.2" and first.theta == pytest.approx(0.0, abs=1e-12)
    assert first.D1 == pytest.approx(q["d1"], abs=1e-12)
    first, _ = bt_vertex_construction(joint, cfg, q["h1"], q["h1"] + q["d2"] - q["d1"])
    assert first.label == "1.1"
    assert first.theta == pytest.approx((q["i2"] - q["i2_given_y1"]) / q["i2"], abs=1e-12)


def test_bt_vertex_rejects_bad_distortion():
    joint = sources.dsbs(0.1)
    cfg = AuxConfig.single(np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        bt_vertex_construction(joint, cfg, 1.5, 1.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 10_000))
def test_coupling_identity(t, seed):
    rng = np.random.default_rng(seed)
    joint = sources.random_joint(rng, (2, 2))
    assert abs(tuning_coupling_check(joint, random_cfg(rng), t)) < 1e-9


def test_coupled_instance_endpoints():
    joint = sources.dsbs(0.3)
    inst = coupled_ceo_instance(joint, CouplingParam(1.0))
    assert inst.joint.shape == (4, 2, 2)
    with pytest.raises(ValueError):
        CouplingParam(1.5)


def _brute_force_pair_scan(F1, F2, r1, r2, eps, n=20_001):
    """Any consecutive pair and weight meeting both targets?"""
    w = np.linspace(0, 1, n)
    for j in range(len(F1) - 1):
        g1 = (1 - w) * F1[j] + w * F1[j + 1]
        g2 = (1 - w) * F2[j] + w * F2[j + 1]
        if np.any((g1 <= r1 + eps) & (g2 <= r2 + eps)):
            return True
    return False


def test_amplify_sampled_against_pair_scan():
    rng = np.random.default_rng(5)
    found = 0
    for _ in range(300):
        n = int(rng.integers(2, 8))
        ts = np.linspace(0, 1, n)
        F1 = rng.uniform(0, 1, n)
        F2 = rng.uniform(0, 1, n)
        r1, r2 = rng.uniform(0, 1, 2)
        try:
            res = amplify_sampled(ts, list(range(n)), lambda k: F1[k], lambda k: F2[k], r1, r2)
        except PreconditionError:
            continue
        scan = _brute_force_pair_scan(F1, F2, r1, r2, 1e-6)
        if res is None:
            assert not scan
        else:
            found += 1
            assert res.g1 <= r1 + 1e-6 and res.g2 <= r2 + 1e-6
            th = res.theta
            assert res.g1 == pytest.approx(th * F1[res.x1] + (1 - th) * F1[res.x2], abs=1e-12)
    assert found > 0


def test_amplify_convexity_bisects_a_continuous_path():
    # t f1 + (1-t) f2 = t(1-t) <= 1/4, and only t = 1/2 meets both targets
    res = amplify_convexity(lambda t: t, lambda x: (1 - x) ** 2, lambda x: x ** 2,
                            0.25, 0.25, eps=1e-6, ts=[0.0, 1.0])
    assert res.g1 <= 0.25 + 1e-6 and res.g2 <= 0.25 + 1e-6
    assert res.t_star == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(PreconditionError):
        amplify_sampled([0.5], [0], lambda k: 1.0, lambda k: 1.0, 0.0, 0.0)
