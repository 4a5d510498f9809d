"""Desk-scale DeepJSCC: dense encoder/decoder trained through an AWGN channel.

Channel uses are ``N`` real dimensions. The encoder output is scaled so the
mean of ||z||^2 over a batch equals N; after training the scale is frozen and
applied per frame.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core_math import RngStream, spectral_norm
from .ldpc import ParameterError
from .nn import AdamW, DenseNetwork

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    snr_db: float = 10.0
    h_mag: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("learning_rate, epochs and batch_size must be positive")

    @property
    def sigma2(self) -> float:
        """Noise variance per real channel dimension."""
        return self.h_mag**2 / 10 ** (self.snr_db / 10)


def make_encoder(M: int, N: int, rng: RngStream, hidden: int = 64) -> DenseNetwork:
    return DenseNetwork.init([M, hidden, N], ["relu", "linear"], rng)


def make_decoder(N: int, M: int, rng: RngStream, hidden: int = 64) -> DenseNetwork:
    return DenseNetwork.init([N, hidden, hidden, M], ["relu", "relu", "sigmoid"], rng)


def _batch_scale(u: np.ndarray) -> float:
    N = u.shape[1]
    p = float(np.sum(u * u)) / u.shape[0]
    if p <= 0:
        raise ParameterError("encoder output has zero power")
    return math.sqrt(N / p)


def encode(f: DenseNetwork, x, scale: float | None = None) -> np.ndarray:
    """Channel input for a batch (or single vector) of sources.

    With ``scale=None`` the batch itself is normalized to mean power N.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.input_dim:
        raise ParameterError(f"source dimension {x.shape[-1]} != encoder input {f.input_dim}")
    u = np.atleast_2d(f(x))
    c = _batch_scale(u) if scale is None else scale
    z = c * u
    return z[0] if x.ndim == 1 else z


def decode(g: DenseNetwork, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != g.input_dim:
        raise ParameterError(f"channel dimension {r.shape[-1]} != decoder input {g.input_dim}")
    return g(r)


@dataclass
class DeepJSCC:
    encoder: DenseNetwork
    decoder: DenseNetwork
    power_scale: float
    loss_curve: list[float] = field(default_factory=list)

    @property
    def M(self) -> int:
        return self.encoder.input_dim

    @property
    def N(self) -> int:
        return self.encoder.output_dim

    def encode(self, x) -> np.ndarray:
        return encode(self.encoder, x, self.power_scale)

    def decode(self, r) -> np.ndarray:
        return decode(self.decoder, r)

    def transmit(self, z, h_mag: float, sigma2: float, rng: RngStream) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return h_mag * z + math.sqrt(sigma2) * rng.gen.standard_normal(z.shape)


def train(f: DenseNetwork, g: DenseNetwork, data: np.ndarray, cfg: TrainingConfig,
          rng: RngStream | None = None) -> DeepJSCC:
    """End-to-end MSE training with fresh channel noise per batch.

    The networks are updated in place and wrapped with the frozen training-set
    power scale.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ParameterError("dataset must be a nonempty 2-D array")
    rng = rng or RngStream(cfg.seed, 7)
    sigma = math.sqrt(cfg.sigma2)
    opt_f = AdamW(f.params(), cfg.learning_rate, weight_decay=cfg.weight_decay)
    opt_g = AdamW(g.params(), cfg.learning_rate, weight_decay=cfg.weight_decay)
    n = data.shape[0]
    curve = []
    for epoch in range(cfg.epochs):
        order = rng.gen.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            xb = data[order[start:start + cfg.batch_size]]
            B = xb.shape[0]
            u, cache_f = f.forward(xb, keep=True)
            c = _batch_scale(u)
            z = c * u
            r = cfg.h_mag * z + sigma * rng.gen.standard_normal(z.shape)
            xh, cache_g = g.forward(r, keep=True)
            err = xh - xb
            loss = float(np.mean(err * err))
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} at epoch {epoch}")
            total += loss * B
            grads_g, d_r = g.backward(cache_g, 2.0 * err / err.size)
            d_z = cfg.h_mag * d_r
            # normalization c = sqrt(N B / S), S = sum(u^2) over the batch
            S = float(np.sum(u * u))
            d_u = c * d_z - (c / S) * float(np.sum(d_z * u)) * u
            grads_f, _ = f.backward(cache_f, d_u)
            opt_g.step(grads_g)
            opt_f.step(grads_f)
        curve.append(total / n)
    scale = _batch_scale(f(data))
    log.info("trained DeepJSCC: final loss %.3g, power scale %.4g", curve[-1], scale)
    return DeepJSCC(f, g, scale, curve)


def jacobian(g: DenseNetwork, r) -> np.ndarray:
    return g.jacobian(np.asarray(r, dtype=float))


class LipschitzEstimate(NamedTuple):
    G_hat: float
    sample_count: int
    norm_min: float
    norm_median: float
    norm_max: float


def estimate_lipschitz(g: DenseNetwork, samples) -> LipschitzEstimate:
    """Largest sampled Jacobian spectral norm; a lower estimate of the true constant."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    norms = np.array([spectral_norm(jacobian(g, r)) for r in samples])
    return LipschitzEstimate(float(norms.max()), len(norms), float(norms.min()),
                             float(np.median(norms)), float(norms.max()))
