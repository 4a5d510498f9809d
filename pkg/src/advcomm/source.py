"""Synthetic sources, uniform scalar quantization and distortion metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core_math import RngStream
from .ldpc import ParameterError


@dataclass(frozen=True)
class SourceSpec:
    """Source description.

    ``gaussian`` draws i.i.d. N(mean, variance) coordinates, optionally clipped;
    ``sparse_gaussian`` keeps exactly ceil(sparsity*M) nonzero coordinates;
    ``patch`` synthesizes smooth sqrt(M) x sqrt(M) grayscale patches in [0, 1].
    """

    kind: str = "gaussian"
    M: int = 8
    variance: float = 0.0225
    mean: float = 0.5
    sparsity: float = 0.25
    clip: tuple[float, float] | None = (0.0, 1.0)

    def __post_init__(self):
        if self.M <= 0 or self.variance <= 0:
            raise ParameterError("source needs M > 0 and variance > 0")
        if self.kind not in ("gaussian", "sparse_gaussian", "patch"):
            raise ParameterError(f"unknown source kind {self.kind!r}")
        if self.kind == "patch" and math.isqrt(self.M) ** 2 != self.M:
            raise ParameterError("patch sources need a square dimension")

    def erasure_reconstruction(self) -> np.ndarray:
        fill = 0.0 if self.kind == "sparse_gaussian" else self.mean
        return np.full(self.M, fill)

    def erasure_distortion(self) -> float:
        """Expected squared error of reconstructing every coordinate at the mean."""
        if self.kind == "sparse_gaussian":
            # reconstruct at zero: E||x||^2 over the active coordinates
            k = math.ceil(self.sparsity * self.M)
            return k * (self.variance + self.mean**2)
        return self.M * self.variance


def generate(spec: SourceSpec, count: int, rng: RngStream) -> np.ndarray:
    g = rng.gen
    M = spec.M
    sd = math.sqrt(spec.variance)
    if spec.kind == "gaussian":
        x = spec.mean + sd * g.standard_normal((count, M))
    elif spec.kind == "sparse_gaussian":
        k = math.ceil(spec.sparsity * M)
        x = np.zeros((count, M))
        vals = spec.mean + sd * g.standard_normal((count, k))
        for i in range(count):
            x[i, g.choice(M, size=k, replace=False)] = vals[i]
    else:
        side = math.isqrt(M)
        u = np.arange(side) / side
        x = np.empty((count, M))
        for i in range(count):
            patch = np.full((side, side), 0.0)
            for _ in range(3):
                fx, fy = g.uniform(0, 2, size=2)
                ph = g.uniform(0, 2 * np.pi)
                patch += np.cos(2 * np.pi * (fx * u[:, None] + fy * u[None, :]) + ph)
            patch = spec.mean + sd * patch / math.sqrt(1.5) + 0.1 * sd * g.standard_normal((side, side))
            x[i] = patch.reshape(-1)
    if spec.clip is not None:
        x = np.clip(x, *spec.clip)
    return x


@dataclass(frozen=True)
class QuantizerSpec:
    bits_per_sample: int = 8
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.bits_per_sample < 1 or not self.lo < self.hi:
            raise ParameterError("quantizer needs bits >= 1 and lo < hi")

    @property
    def levels(self) -> int:
        return 1 << self.bits_per_sample

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.levels


def quantize_indices(q: QuantizerSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    idx = np.floor((x - q.lo) / q.step).astype(np.int64)
    return np.clip(idx, 0, q.levels - 1)


def indices_to_bits(q: QuantizerSpec, idx) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).reshape(-1)
    shifts = np.arange(q.bits_per_sample - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def dequantize(q: QuantizerSpec, bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).reshape(-1, q.bits_per_sample)
    idx = b @ (1 << np.arange(q.bits_per_sample - 1, -1, -1))
    return q.lo + (idx + 0.5) * q.step


def quantize(q: QuantizerSpec, x):
    """Uniform midrise quantizer; returns ``(bits, dequantized x)``."""
    idx = quantize_indices(q, x)
    bits = indices_to_bits(q, idx)
    return bits, q.lo + (idx.reshape(-1) + 0.5) * q.step


class Metrics(NamedTuple):
    sq_error: float  # ||x - x_hat||^2, the distortion used by the bounds
    mse: float  # per-dimension
    psnr_db: float
    nmse_db: float


def metrics(x, x_hat, peak: float = 1.0) -> Metrics:
    x = np.asarray(x, dtype=float).reshape(-1)
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    if x.shape != x_hat.shape:
        raise ParameterError("metric inputs must have equal dimension")
    err = float(np.sum((x - x_hat) ** 2))
    mse = err / x.size
    psnr = math.inf if mse == 0 else 10 * math.log10(peak**2 / mse)
    ref = float(np.sum(x**2))
    if ref == 0:
        nmse = math.nan
    elif err == 0:
        nmse = -math.inf
    else:
        nmse = 10 * math.log10(err / ref)
    return Metrics(err, mse, psnr, nmse)


def psnr_to_mse(psnr_db: float, peak: float = 1.0) -> float:
    return peak**2 / 10 ** (psnr_db / 10)


def export_csv(x: np.ndarray, path) -> None:
    np.savetxt(Path(path), np.atleast_2d(x), delimiter=",", fmt="%.17g")
