from fractions import Fraction

import numpy as np
import pytest

from advcomm.core_math import RngStream
from advcomm.link import ClassicalLink
from advcomm.ldpc import ParameterError
from advcomm.modem import QAM16, QPSK, ChannelParams, transmit
from advcomm.source import QuantizerSpec, SourceSpec, generate
from advcomm.vs_attack import (SignalFrame, VsAttackConfig, fd_gradient, run_vs_attack, symbol_confidence,
                               symbol_weights)
from advcomm.vuln import analyze


@pytest.fixture(scope="module")
def link():
    return ClassicalLink.build(108, Fraction(5, 6), 3, QPSK, SourceSpec(), QuantizerSpec(), RngStream(0, 1))


def test_clean_link_reconstructs_quantized_source(link):
    x = generate(SourceSpec(), 1, RngStream(0, 2))[0]
    _, z = link.encode_source(x)
    ch = ChannelParams.from_snr_db(30.0)
    rx = link.receive(x, z, ch)
    assert rx.converged
    assert rx.distortion <= link.src.M * (link.quant.step / 2) ** 2


def test_failure_scores_erasure_distortion(link):
    x = generate(SourceSpec(), 1, RngStream(0, 3))[0]
    rx = link.receive(x, np.zeros(link.n_sym, dtype=complex), ChannelParams.from_snr_db(5.0))
    assert not rx.converged
    assert rx.distortion == pytest.approx(link.src.erasure_distortion())


def test_payload_must_fit():
    with pytest.raises(ParameterError):
        ClassicalLink.build(48, Fraction(1, 2), 3, QPSK, SourceSpec(), QuantizerSpec(), RngStream(0))


@pytest.mark.parametrize("c", [QPSK, QAM16])
def test_fd_gradient_matches_analytic_direction(c):
    r = np.array([0.3 + 0.2j, -0.6 - 0.1j])
    nv = 0.2
    g = fd_gradient(c, r, nv)
    h = 1e-4
    gx = (symbol_confidence(c, r + h, nv, clip=False) - symbol_confidence(c, r - h, nv, clip=False)) / (2 * h)
    assert np.allclose(g.real, gx, rtol=1e-4)


def test_weights(link):
    prof = analyze(link.h)
    w = symbol_weights(prof, link.symbol_vns(), 9.0)
    hit = prof.mask()[link.symbol_vns()].any(axis=1)
    assert set(w[hit]) == {10.0} and set(w[~hit]) <= {1.0}
    assert np.all(symbol_weights(prof, link.symbol_vns(), 0.0) == 1.0)


def test_vs_attack_breaks_decoding_and_power_is_exact(link):
    ch = ChannelParams.from_snr_db(8.0)
    x = generate(SourceSpec(), 1, RngStream(0, 4))[0]
    _, z = link.encode_source(x)
    r = transmit(z, ch, RngStream(0, 5))
    trace = []
    cfg = VsAttackConfig(stop="distortion", target_distortion=0.1)
    res = run_vs_attack(x, SignalFrame.from_received(r), link, ch, analyze(link.h), cfg, trace.append)
    assert res.success and res.steps == len(trace) - 1
    assert res.rho_star == pytest.approx(np.sum(np.abs(res.perturbation) ** 2))
    assert trace[-1]["power"] == res.rho_star
    assert res.final_distortion >= 0.1


def test_vs_config_validation():
    with pytest.raises(ValueError):
        VsAttackConfig(stop="distortion")
    with pytest.raises(ValueError):
        VsAttackConfig(eta_step=-1.0)
