"""Classical separate source-channel chain: quantize, LDPC-encode, modulate, and back."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ldpc
from .core_math import RngStream
from .modem import ChannelParams, Constellation, frame_llrs, modulate
from .source import QuantizerSpec, SourceSpec, dequantize, quantize


@dataclass(frozen=True)
class Reception:
    x_hat: np.ndarray
    converged: bool
    iters: int
    distortion: float  # ||x - x_hat||^2, erasure distortion on decode failure


@dataclass(frozen=True)
class ClassicalLink:
    h: ldpc.ParityCheckMatrix
    g: ldpc.GeneratorMatrix
    const: Constellation
    src: SourceSpec
    quant: QuantizerSpec
    max_iters: int = 50

    @classmethod
    def build(cls, n: int, rate, col_weight: int, const: Constellation, src: SourceSpec,
              quant: QuantizerSpec, rng: RngStream, max_iters: int = 50) -> "ClassicalLink":
        if n % const.bits_per_symbol:
            raise ldpc.ParameterError("block length must be a multiple of bits per symbol")
        h = ldpc.build_regular_ldpc(n, rate, col_weight, rng)
        g, _ = ldpc.to_generator(h)
        if g.k < src.M * quant.bits_per_sample:
            raise ldpc.ParameterError(
                f"code carries {g.k} information bits but the source needs {src.M * quant.bits_per_sample}")
        return cls(h, g, const, src, quant, max_iters)

    @property
    def n_sym(self) -> int:
        return self.h.n // self.const.bits_per_symbol

    @property
    def payload_bits(self) -> int:
        return self.src.M * self.quant.bits_per_sample

    def symbol_vns(self) -> np.ndarray:
        """Row j lists the codeword positions carried by symbol j."""
        B = self.const.bits_per_symbol
        return np.arange(self.h.n).reshape(self.n_sym, B)

    def encode_source(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Returns ``(codeword, transmitted symbols)``; spare info bits are zero."""
        bits, _ = quantize(self.quant, x)
        info = np.zeros(self.g.k, dtype=np.uint8)
        info[: bits.size] = bits
        cw = ldpc.encode(self.g, info)
        return cw, modulate(self.const, cw)

    def receive(self, x, y, ch: ChannelParams) -> Reception:
        llr = frame_llrs(self.const, np.asarray(y) / ch.h_mag, ch.noise_var_eff)
        bits, ok, iters = ldpc.bp_decode(self.h, llr, self.max_iters)
        x = np.asarray(x, dtype=float)
        if not ok:
            # a failed frame is scored at the expected erasure distortion, not the
            # realized one, so every frame has the same failure level
            return Reception(self.src.erasure_reconstruction(), False, iters,
                             self.src.erasure_distortion())
        info = bits[self.g.info_positions][: self.payload_bits]
        x_hat = dequantize(self.quant, info)
        return Reception(x_hat, True, iters, float(np.sum((x - x_hat) ** 2)))
