import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from advcomm.core_math import RngStream
from advcomm.modem import (QAM16, QPSK, ChannelParams, bit_llrs, constellation, hard_demap, modulate,
                           transmit)


@pytest.mark.parametrize("c", [QPSK, QAM16])
def test_unit_average_energy(c):
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", [QPSK, QAM16])
def test_gray_adjacency(c):
    pts = c.points
    d = np.abs(pts[:, None] - pts[None, :])
    dmin = d[d > 0].min()
    for i, j in itertools.combinations(range(c.order), 2):
        if abs(d[i, j] - dmin) < 1e-12:
            assert np.sum(c.labels[i] != c.labels[j]) == 1


@pytest.mark.parametrize("c", [QPSK, QAM16])
def test_modulate_demap_round_trip(c):
    bits = np.random.default_rng(0).integers(0, 2, 40 * c.bits_per_symbol)
    assert np.array_equal(hard_demap(c, modulate(c, bits)), bits)


@pytest.mark.parametrize("c", [QPSK, QAM16])
def test_llr_matches_brute_force(c):
    rng = np.random.default_rng(2)
    nv = 0.3
    for y in rng.standard_normal(25) + 1j * rng.standard_normal(25):
        got = bit_llrs(c, y, nv, clip=False)
        for b in range(c.bits_per_symbol):
            num = [-abs(y - p) ** 2 / nv for p, lab in zip(c.points, c.labels) if lab[b] == 0]
            den = [-abs(y - p) ** 2 / nv for p, lab in zip(c.points, c.labels) if lab[b] == 1]
            assert got[b] == pytest.approx(logsumexp(num) - logsumexp(den), abs=1e-10)


def test_llr_clip_and_origin():
    assert np.all(np.abs(bit_llrs(QPSK, 0.0, 1.0)) == 0)
    assert np.all(np.abs(bit_llrs(QPSK, 10 + 10j, 1e-3)) == 25)


def test_channel_noise_convention():
    ch = ChannelParams.from_snr_db(10.0, h_mag=2.0)
    assert ch.snr_db == pytest.approx(10.0)
    assert ch.noise_var_eff == pytest.approx(0.1)
    w = transmit(np.zeros(200_000), ch, RngStream(0)) / ch.h_mag
    # complex variance noise_var, half per real dimension
    assert np.var(w.real) == pytest.approx(ch.noise_var_eff / 2, rel=0.02)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(ch.noise_var_eff, rel=0.02)


def test_constellation_lookup():
    assert constellation("16qam") is QAM16 and constellation(4) is QPSK
    with pytest.raises(ValueError):
        constellation("8psk")
    assert math.isclose(abs(QPSK.points[0]), 1.0)
