"""Gray-mapped QPSK/16-QAM, exact soft demapping and the flat-fading AWGN channel.

Noise convention: ``noise_var`` is the variance of the complex noise sample
per symbol, split equally between I and Q (``noise_var / 2`` each). With
unit-power constellations the SNR ``h_mag**2 / noise_var`` is then Es/N0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .core_math import RngStream
from .ldpc import LLR_CLIP, ParameterError


@dataclass(frozen=True)
class Constellation:
    order: int

    def __post_init__(self):
        if self.order not in (4, 16):
            raise ParameterError("only QPSK (4) and 16-QAM (16) are supported")

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @cached_property
    def labels(self) -> np.ndarray:
        """labels[p] is the bit tuple of point p (MSB first)."""
        B = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(B - 1, -1, -1)) & 1).astype(np.uint8)

    @cached_property
    def points(self) -> np.ndarray:
        b = self.labels.astype(float)
        if self.order == 4:
            return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / math.sqrt(2)
        i = (1 - 2 * b[:, 0]) * (2 - (1 - 2 * b[:, 2]))
        q = (1 - 2 * b[:, 1]) * (2 - (1 - 2 * b[:, 3]))
        return (i + 1j * q) / math.sqrt(10)


QPSK = Constellation(4)
QAM16 = Constellation(16)


def constellation(name: str | int) -> Constellation:
    key = str(name).lower()
    if key in ("4", "qpsk"):
        return QPSK
    if key in ("16", "16qam", "16-qam", "qam16"):
        return QAM16
    raise ParameterError(f"unknown modulation {name!r}")


@dataclass(frozen=True)
class ChannelParams:
    h_mag: float
    noise_var: float

    def __post_init__(self):
        if self.h_mag < 0 or self.noise_var <= 0:
            raise ParameterError("need h_mag >= 0 and noise_var > 0")

    @classmethod
    def from_snr_db(cls, snr_db: float, h_mag: float = 1.0) -> "ChannelParams":
        return cls(h_mag=h_mag, noise_var=h_mag**2 / 10 ** (snr_db / 10))

    @property
    def snr(self) -> float:
        return self.h_mag**2 / self.noise_var

    @property
    def snr_db(self) -> float:
        return 10 * math.log10(self.snr)

    @property
    def noise_var_eff(self) -> float:
        """Noise variance seen after dividing the received signal by h_mag."""
        return self.noise_var / self.h_mag**2


def modulate(c: Constellation, bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    B = c.bits_per_symbol
    if b.ndim != 1 or b.size % B:
        raise ParameterError(f"bit count must be a multiple of {B}")
    idx = b.reshape(-1, B) @ (1 << np.arange(B - 1, -1, -1))
    return c.points[idx]


def hard_demap(c: Constellation, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    idx = np.argmin(np.abs(y[:, None] - c.points[None, :]), axis=1)
    return c.labels[idx].reshape(-1)


def bit_llrs(c: Constellation, y, noise_var_eff: float, clip: bool = True) -> np.ndarray:
    """Exact log-sum LLRs, ln P(b=0|y)/P(b=1|y), clipped to +/-25 unless ``clip`` is off.

    ``y`` may be a scalar (returns length B) or an array (returns shape
    ``y.shape + (B,)``).
    """
    if noise_var_eff <= 0:
        raise ParameterError("noise_var_eff must be positive")
    y = np.asarray(y, dtype=complex)
    metric = -np.abs(y[..., None] - c.points) ** 2 / noise_var_eff
    out = np.empty(y.shape + (c.bits_per_symbol,))
    for b in range(c.bits_per_symbol):
        zero = c.labels[:, b] == 0
        out[..., b] = logsumexp(metric[..., zero], axis=-1) - logsumexp(metric[..., ~zero], axis=-1)
    return np.clip(out, -LLR_CLIP, LLR_CLIP) if clip else out


def frame_llrs(c: Constellation, y, noise_var_eff: float) -> np.ndarray:
    """Bit LLRs for a symbol vector, flattened in transmission bit order."""
    return bit_llrs(c, np.asarray(y), noise_var_eff).reshape(-1)


def transmit(z, p: ChannelParams, rng: RngStream) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ParameterError("transmit symbols must be finite")
    sd = math.sqrt(p.noise_var / 2)
    w = sd * (rng.gen.standard_normal(z.shape) + 1j * rng.gen.standard_normal(z.shape))
    return p.h_mag * z + w
