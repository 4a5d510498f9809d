import math

import numpy as np
import pytest

from advcomm.core_math import RngStream
from advcomm.nn import DenseNetwork, Layer
from advcomm.pga_attack import (CwConfig, PgaConfig, closed_form_perturbation, cw_batch, cw_run,
                                distortion, distortion_gradient, pga_run)


def linear_decoder(rng, n=6, m=4):
    return DenseNetwork([Layer(rng.gen.standard_normal((m, n)), rng.gen.standard_normal(m))])


def test_gradient_matches_finite_differences():
    g = DenseNetwork.init([6, 8, 3], ["relu", "sigmoid"], RngStream(0))
    x, y = np.full(3, 0.3), RngStream(1).gen.standard_normal(6)
    num = np.array([(distortion(g, x, y + e) - distortion(g, x, y - e)) / 2e-6 for e in 1e-6 * np.eye(6)])
    assert np.allclose(distortion_gradient(g, x, y), num, atol=1e-7)


def test_pga_reaches_target_and_reports_power():
    g = linear_decoder(RngStream(2))
    x = np.zeros(4)
    r = np.zeros(6)
    res = pga_run(g, x, r, PgaConfig(alpha=0.05, target_distortion=distortion(g, x, r) * 4))
    assert res.success
    assert res.rho_star == pytest.approx(float(res.perturbation @ res.perturbation))
    assert res.distortion_trace[-1] >= distortion(g, x, r) * 4


def test_pga_already_above_target():
    g = linear_decoder(RngStream(3))
    res = pga_run(g, np.full(4, 100.0), np.zeros(6), PgaConfig(target_distortion=1.0))
    assert res.success and res.rho_star == 0 and res.steps == 0


def test_closed_form_for_linear_decoder():
    g = linear_decoder(RngStream(4))
    x, r = np.zeros(4), RngStream(5).gen.standard_normal(6)
    res = pga_run(g, x, r, PgaConfig(alpha=0.3, max_iters=4, target_distortion=1e12))
    ys, a = res.extras["y_history"], res.extras["coefs"]
    for t in range(1, 5):
        s_t = ys[t] - ys[t - 1]
        assert np.allclose(closed_form_perturbation(g, x, ys, a, t), s_t, rtol=1e-10, atol=1e-12)
    with pytest.raises(ValueError):
        closed_form_perturbation(g, x, ys, a, 0)


def test_cw_batch_equals_single_frame_runs():
    g = DenseNetwork.init([4, 6, 2], ["relu", "linear"], RngStream(6))
    X = RngStream(7).gen.standard_normal((3, 2))
    R = RngStream(8).gen.standard_normal((3, 4))
    cfg = CwConfig(max_iters=60, rounds=3, lr=0.05, target_distortion=2.0 + distortion(g, X[0], R[0]))
    batch = cw_batch(g, X, R, cfg)
    for i in range(3):
        single = cw_run(g, X[i], R[i], cfg)
        assert single.success == batch[i].success
        # batched BLAS may round differently in the last bit
        assert single.rho_star == pytest.approx(batch[i].rho_star, rel=1e-9)


def test_cw_succeeds_on_sensitive_decoder_and_fails_as_inf():
    g = DenseNetwork([Layer(5 * np.eye(2), np.zeros(2))])
    x = np.array([0.1, 0.0])
    ok = cw_run(g, x, np.zeros(2), CwConfig(max_iters=300, rounds=4, lr=0.02, target_distortion=1.0))
    assert ok.success and ok.rho_star > 0
    # successful perturbations must really cross the target
    assert distortion(g, x, ok.perturbation) >= 1.0
    flat = DenseNetwork([Layer(1e-6 * np.eye(2), np.zeros(2))])
    bad = cw_run(flat, x, np.zeros(2), CwConfig(max_iters=50, rounds=2, target_distortion=1.0))
    assert not bad.success and math.isinf(bad.rho_star)


def test_config_validation():
    with pytest.raises(ValueError):
        PgaConfig(alpha=0)
    with pytest.raises(ValueError):
        CwConfig(c_init=1000)
