"""Small dense networks with hand-written reverse-mode differentiation.

Shared by the DeepJSCC encoder/decoder and the DQN value network. Weights are
stored as ``W`` of shape (out, in) and applied to row-batches ``X @ W.T + b``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core_math import RngStream

ACTIVATIONS = ("linear", "relu", "sigmoid")
_ACT_CODE = {name: i for i, name in enumerate(ACTIVATIONS)}
MAGIC = b"ADVNET"
FORMAT_VERSION = 1


def _act(name: str, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(a, 0.0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * a))
    return a


def _act_grad(name: str, a: np.ndarray, out: np.ndarray) -> np.ndarray:
    if name == "relu":
        # subgradient 0 at the kink
        return (a > 0).astype(a.dtype)
    if name == "sigmoid":
        return out * (1.0 - out)
    return np.ones_like(a)


@dataclass
class Layer:
    W: np.ndarray
    b: np.ndarray
    act: str = "linear"

    def __post_init__(self):
        if self.act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.act!r}")
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError("layer weight/bias shapes are inconsistent")


class DenseNetwork:
    """Feed-forward stack of ``Layer``s."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.W.shape[0] != b.W.shape[1]:
                raise ValueError("adjacent layer dimensions do not chain")
        self.layers = layers

    @classmethod
    def init(cls, sizes: list[int], acts: list[str], rng: RngStream) -> "DenseNetwork":
        layers = []
        for (fan_in, fan_out), act in zip(zip(sizes, sizes[1:]), acts):
            scale = np.sqrt(2.0 / fan_in) if act == "relu" else np.sqrt(1.0 / fan_in)
            layers.append(Layer(scale * rng.gen.standard_normal((fan_out, fan_in)), np.zeros(fan_out), act))
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].W.shape[0]

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in (layer.W, layer.b)]

    def copy(self) -> "DenseNetwork":
        return DenseNetwork([Layer(l.W.copy(), l.b.copy(), l.act) for l in self.layers])

    def load_params(self, other: "DenseNetwork") -> None:
        for dst, src in zip(self.layers, other.layers):
            dst.W[...] = src.W
            dst.b[...] = src.b

    def check_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())

    def forward(self, x, keep: bool = False):
        h = np.asarray(x, dtype=float)
        single = h.ndim == 1
        if single:
            h = h[None, :]
        if h.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got {h.shape[1]}")
        cache = []
        for layer in self.layers:
            a = h @ layer.W.T + layer.b
            out = _act(layer.act, a)
            if keep:
                cache.append((h, a, out))
            h = out
        if single and not keep:
            return h[0]
        return (h, cache) if keep else h

    __call__ = forward

    def backward(self, cache, grad_out, need_params: bool = True):
        """Reverse pass. Returns ``(param_grads, grad_input)``."""
        g = np.asarray(grad_out, dtype=float)
        grads: list[np.ndarray] = []
        for layer, (h_in, a, out) in zip(reversed(self.layers), reversed(cache)):
            g = g * _act_grad(layer.act, a, out)
            if need_params:
                grads.append(g.sum(axis=0))
                grads.append(g.T @ h_in)
            g = g @ layer.W
        grads.reverse()
        return grads, g

    def vjp(self, x, cotangent) -> np.ndarray:
        """Row-vector times Jacobian at a single input ``x``."""
        _, cache = self.forward(np.asarray(x, dtype=float)[None, :], keep=True)
        _, g = self.backward(cache, np.asarray(cotangent, dtype=float)[None, :], need_params=False)
        return g[0]

    def jacobian(self, x) -> np.ndarray:
        """Exact (output_dim x input_dim) Jacobian by reverse mode, one sweep per output."""
        x = np.asarray(x, dtype=float)
        rep = np.repeat(x[None, :], self.output_dim, axis=0)
        _, cache = self.forward(rep, keep=True)
        _, g = self.backward(cache, np.eye(self.output_dim), need_params=False)
        return g

    # serialization ---------------------------------------------------
    def to_bytes(self) -> bytes:
        head = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(self.layers))]
        for l in self.layers:
            head.append(struct.pack("<IIB", l.W.shape[1], l.W.shape[0], _ACT_CODE[l.act]))
        body = [np.ascontiguousarray(p, dtype="<f8").tobytes() for p in self.params()]
        return b"".join(head + body)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DenseNetwork":
        if data[:6] != MAGIC:
            raise ValueError("not a network weight file")
        version, count = struct.unpack_from("<II", data, 6)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported weight format version {version}")
        off = 14
        dims = []
        for _ in range(count):
            fin, fout, code = struct.unpack_from("<IIB", data, off)
            off += 9
            dims.append((fin, fout, ACTIVATIONS[code]))
        layers = []
        for fin, fout, act in dims:
            W = np.frombuffer(data, "<f8", fin * fout, off).reshape(fout, fin).copy()
            off += 8 * fin * fout
            b = np.frombuffer(data, "<f8", fout, off).copy()
            off += 8 * fout
            layers.append(Layer(W, b, act))
        return cls(layers)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DenseNetwork":
        return cls.from_bytes(Path(path).read_bytes())


class AdamW:
    """Adaptive-moment optimizer with decoupled weight decay."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = params
        self.lr, self.b1, self.b2, self.eps, self.wd = lr, betas[0], betas[1], eps, weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if self.wd:
                p *= 1 - self.lr * self.wd
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
