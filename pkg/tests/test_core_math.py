import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advcomm.core_math import RngStream, spectral_norm, svd


def test_streams_are_reproducible_and_independent():
    a = RngStream(3, (1, 2)).gen.standard_normal(5)
    b = RngStream(3, (1, 2)).gen.standard_normal(5)
    c = RngStream(3, (1, 3)).gen.standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert RngStream(3, 1).child(2).stream_id == (1, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 10_000))
def test_svd_reconstructs_and_matches_lapack(r, c, seed):
    m = np.random.default_rng(seed).standard_normal((r, c))
    u, s, v = svd(m)
    assert np.allclose(u @ np.diag(s) @ v.T, m, atol=1e-12)
    assert np.allclose(s, np.linalg.svd(m, compute_uv=False), atol=1e-12)
    assert np.all(np.diff(s) <= 1e-15)
    assert np.allclose(v.T @ v, np.eye(v.shape[1]), atol=1e-12)


def test_svd_rank_deficient_has_orthonormal_u():
    m = np.outer([1.0, 2, 3], [1.0, -1])
    u, s, v = svd(m)
    assert s[1] == pytest.approx(0, abs=1e-14)
    assert np.allclose(u.T @ u, np.eye(2), atol=1e-12)


def test_svd_rejects_bad_input():
    with pytest.raises(ValueError):
        svd(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        svd(np.array([[np.nan]]))


def test_spectral_norm():
    m = np.random.default_rng(1).standard_normal((6, 4))
    assert spectral_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-9)
    assert spectral_norm(np.zeros((3, 3))) == 0.0
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)


def test_svd_converges_on_rank_deficient_binary_matrices():
    rng = np.random.default_rng(8)
    for _ in range(300):
        m, n = rng.integers(1, 12, 2)
        d = (rng.random((m, n)) < 0.3).astype(float)
        d[:, -1] = d[:, 0]
        u, s, v = svd(d)
        assert np.allclose(u @ np.diag(s) @ v.T, d, atol=1e-12)
        assert np.allclose(s, np.linalg.svd(d, compute_uv=False), atol=1e-12)
