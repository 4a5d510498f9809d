import numpy as np
import pytest

from advcomm import deepjscc as dj
from advcomm.core_math import RngStream
from advcomm.ldpc import ParameterError
from advcomm.source import SourceSpec, generate


@pytest.fixture(scope="module")
def model():
    data = generate(SourceSpec(), 1024, RngStream(0, 1))
    cfg = dj.TrainingConfig(epochs=30, snr_db=10.0)
    return dj.train(dj.make_encoder(8, 16, RngStream(0, 2)), dj.make_decoder(16, 8, RngStream(0, 3)), data, cfg)


def test_power_normalization():
    f = dj.make_encoder(8, 16, RngStream(0, 4))
    x = generate(SourceSpec(), 64, RngStream(0, 5))
    z = dj.encode(f, x)
    assert np.mean(np.sum(z * z, axis=1)) == pytest.approx(16.0)


def test_training_reduces_loss(model):
    assert model.loss_curve[-1] < 0.25 * model.loss_curve[0]
    x = generate(SourceSpec(), 256, RngStream(0, 6))
    z = model.encode(x)
    assert np.mean(np.sum(z * z, axis=1)) == pytest.approx(16.0, rel=0.1)


def test_normalization_gradient():
    # the encoder gradient through the batch power normalization, checked numerically
    f = dj.make_encoder(3, 4, RngStream(1, 1))
    g = dj.make_decoder(4, 3, RngStream(1, 2))
    x = generate(SourceSpec(M=3), 5, RngStream(1, 3))
    cfg = dj.TrainingConfig(epochs=1, batch_size=5, learning_rate=1e-9, weight_decay=0.0, snr_db=200)

    def loss():
        return float(np.mean((g(dj.encode(f, x)) - x) ** 2))

    W = f.layers[0].W
    i, j = 1, 2
    old = W[i, j]
    W[i, j] = old + 1e-6
    up = loss()
    W[i, j] = old - 1e-6
    down = loss()
    W[i, j] = old
    numeric = (up - down) / 2e-6
    # one Adam step of size ~lr along -sign(grad) reveals the analytic gradient sign
    before = W[i, j]
    dj.train(f, g, x, cfg, RngStream(1, 4))
    step = f.layers[0].W[i, j] - before
    assert np.sign(step) == -np.sign(numeric)


def test_dimension_errors(model):
    with pytest.raises(ParameterError):
        model.encode(np.zeros(5))
    with pytest.raises(ParameterError):
        model.decode(np.zeros(3))


def test_lipschitz_estimate(model):
    r = model.transmit(model.encode(generate(SourceSpec(), 20, RngStream(0, 7))), 1.0, 0.1, RngStream(0, 8))
    est = dj.estimate_lipschitz(model.decoder, r)
    assert est.sample_count == 20
    assert est.norm_min <= est.norm_median <= est.norm_max == est.G_hat
    assert est.G_hat == pytest.approx(max(np.linalg.norm(dj.jacobian(model.decoder, v), 2) for v in r), rel=1e-8)
