import dataclasses
import math

import numpy as np
import pytest

from advcomm import bounds
from advcomm.bounds import SystemParams


def params(**kw):
    base = dict(M=8, N=8, sigma_w2=0.1, eta=10.0, G=1.0, theta_x=1.0, D_star=2.0)
    base.update(kw)
    return SystemParams(**base)


def test_separation_bound_solves_capacity_equals_rate():
    p = params()
    rho = bounds.sscc_attack_upper_bound(p)
    assert bounds.capacity(p, rho) == pytest.approx(bounds.rate_distortion_lower(p, p.D_star), rel=1e-12)
    # bisection oracle on the distortion floor
    lo, hi = 0.0, 1e6
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if bounds.distortion_floor(p, mid) < p.D_star else (lo, mid)
    assert rho == pytest.approx(lo, rel=1e-9)


def test_semantic_lower_bound():
    p = params(G=0.1)
    expect = (math.sqrt(2.0) / 0.1 - math.sqrt(0.8)) ** 2
    assert bounds.sem_attack_lower_bound(p) == pytest.approx(expect)
    assert bounds.sem_attack_lower_bound(params(G=100.0)) == 0.0


def test_monotonicity():
    D = np.linspace(0.8, 7.9, 30)
    sem = [bounds.sem_attack_lower_bound(params(G=0.2, D_star=d)) for d in D]
    assert np.all(np.diff(sem) > 0)
    assert np.all(np.diff([bounds.sem_attack_lower_bound(params(G=g)) for g in (0.1, 0.2, 0.3)]) < 0)
    assert np.all(np.diff([bounds.sem_attack_lower_bound(params(G=0.1, sigma_w2=s)) for s in (0.01, 0.1, 1)]) < 0)
    up = [bounds.sscc_attack_upper_bound(params(D_star=d)) for d in D]
    assert np.all(np.diff(up) > 0)


def test_regime_three_raises():
    with pytest.raises(bounds.RegimeIIIError):
        bounds.sscc_attack_upper_bound(params(D_star=8.0))
    with pytest.raises(ValueError):
        params(G=0.0)


def test_entropy_power():
    assert bounds.entropy_power_gaussian(1.0) == 1.0
    assert bounds.entropy_power_gaussian(4.0) == 4.0
    x = 2.0 * np.random.default_rng(0).standard_normal((5000, 3))
    assert bounds.entropy_power_estimate(x) == pytest.approx(4.0, rel=0.05)


def test_d_sem0_linear_decoder_is_exact():
    W = np.random.default_rng(1).standard_normal((4, 6))
    s = np.linalg.svd(W, compute_uv=False)
    pred = bounds.d_sem0_predict([s] * 5, 0.01, 6, float(s[0]))
    assert pred.prediction == pytest.approx(0.01 * np.sum(s**2))
    assert pred.prediction <= pred.bound
    with pytest.raises(ValueError):
        bounds.d_sem0_predict([], 0.01, 6, 1.0)
