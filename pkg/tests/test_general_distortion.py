import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from logloss_rd import sources
from logloss_rd.aux_search import AuxConfig, SearchGrid
from logloss_rd.general_distortion import (DistortionMatrix, best_alpha, beta_of_repro, erasure,
                                           hamming, hamming_gap_audit, hamming_gap_bound,
                                           log_loss_lift, map_reproduction_distortion,
                                           outer_bound_shift, saddle_evaluation)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 20.0))
def test_beta_hamming_closed_form(alpha):
    dm = hamming(alpha)
    for yhat in (0, 1):
        assert beta_of_repro(dm, yhat) == math.log2(1 + 2.0 ** -alpha)


def test_beta_erasure_is_zero():
    dm = erasure()
    for yhat in range(3):
        assert beta_of_repro(dm, yhat) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=6, max_size=6))
def test_lift_identity(entries):
    dm = DistortionMatrix(np.array(entries).reshape(3, 2))
    for yhat in range(2):
        q = log_loss_lift(dm, yhat)
        beta = beta_of_repro(dm, yhat)
        for y in range(3):
            assert q.loss(y) == pytest.approx(dm.d[y, yhat] + beta, abs=1e-12)


def test_erasure_lift_is_exact():
    q = log_loss_lift(erasure(), 2)
    assert list(q.probs) == [0.5, 0.5]
    assert log_loss_lift(erasure(), 0).loss(0) == 0.0


def test_bad_matrix():
    with pytest.raises(ValueError):
        DistortionMatrix(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        DistortionMatrix(np.array([[0.0, math.inf], [1.0, math.inf]]))


def test_map_distortion_and_outer_shift():
    rng = np.random.default_rng(0)
    joint = sources.random_joint(rng, (2, 2))
    cfg = AuxConfig(np.array([0.4, 0.6]),
                    (oracles.random_channel(rng, 2, 2, 2), oracles.random_channel(rng, 2, 2, 3)))
    p = oracles.extend(joint.probs, cfg.q_weights, list(cfg.channels), [0, 1])
    pj = p.sum(axis=2)  # Q, Y1, U1, U2
    err = sum(min(pj[q, 0, a, b], pj[q, 1, a, b])
              for q in range(2) for a in range(2) for b in range(3))
    assert map_reproduction_distortion(joint, cfg, 2.0) == pytest.approx(2.0 * err, abs=1e-12)
    beta = math.log2(1.25)
    shift = outer_bound_shift(joint, cfg, beta, beta)
    assert shift["D1"] == pytest.approx(oracles.cond_entropy(p, [1], [0, 3, 4]) - beta, abs=1e-12)


def test_saddle():
    s = saddle_evaluation()
    assert s.alpha == pytest.approx(2.0, abs=1e-9)
    assert s.value == pytest.approx(0.5 * math.log2(1.25), abs=1e-9)
    assert s.minimax_alpha == pytest.approx(2.0, abs=1e-9)
    assert s.minimax_value == pytest.approx(0.5 * math.log2(1.25), abs=1e-9)
    # min over alpha by dense scan agrees with the root-found argmin
    alphas = np.linspace(0.5, 8, 200_001)
    for H in (0.2, 0.5, s.H, 0.9):
        a = best_alpha(H)
        assert hamming_gap_bound(a, H) <= hamming_gap_bound(alphas, H).min() + 1e-12


def test_gap_audit_bound():
    res = hamming_gap_audit(sources.dsbs(0.1), SearchGrid(10), samples=2000, seed=1)
    assert res.worst_gap <= 0.5 * math.log2(1.25) + 1e-9
    assert res.argmax_source in (1, 2)
