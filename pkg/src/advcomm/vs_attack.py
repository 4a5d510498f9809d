"""Vulnerable-set attack on the coded chain.

Each step moves every received symbol along the negative finite-difference
gradient of its LLR confidence, with extra weight on symbols that carry a
vulnerable variable node, then re-decodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .link import ClassicalLink
from .modem import ChannelParams, Constellation, bit_llrs
from .results import AttackResult
from .vuln import VulnerabilityProfile


@dataclass(frozen=True)
class VsAttackConfig:
    eta_step: float | None = None  # None: 0.01 * sqrt(mean received symbol power)
    extra_weight_e: float = 9.0
    eps_div: float = 1e-6
    fd_scale: float = 1e-6
    max_steps: int = 5000
    stop: str = "decode_failure"  # or "distortion"
    target_distortion: float | None = None

    def __post_init__(self):
        if self.eta_step is not None and self.eta_step <= 0:
            raise ValueError("eta_step must be positive")
        if self.eps_div <= 0 or self.fd_scale <= 0 or self.extra_weight_e < 0:
            raise ValueError("eps_div and fd_scale must be positive, extra_weight_e >= 0")
        if self.stop not in ("decode_failure", "distortion"):
            raise ValueError(f"unknown stop mode {self.stop!r}")
        if self.stop == "distortion" and self.target_distortion is None:
            raise ValueError("distortion stop needs target_distortion")


@dataclass
class SignalFrame:
    """Received symbols ``clean`` and the current attacked view ``y``."""

    clean: np.ndarray
    y: np.ndarray

    @classmethod
    def from_received(cls, r) -> "SignalFrame":
        r = np.asarray(r, dtype=complex)
        return cls(r.copy(), r.copy())

    @property
    def s(self) -> np.ndarray:
        return self.y - self.clean

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.s) ** 2))


def symbol_confidence(c: Constellation, r, noise_var_eff: float, clip: bool = True):
    """Sum of |LLR| over the bits of each symbol; scalar in, scalar out."""
    return np.abs(bit_llrs(c, r, noise_var_eff, clip)).sum(axis=-1)


def fd_gradient(c: Constellation, r, noise_var_eff: float, fd_scale: float = 1e-6):
    """Central-difference gradient of the confidence, packed as d/dRe + j d/dIm.

    Differentiates the unclipped LLRs: the decoder's +/-25 clip would give
    saturated symbols a zero gradient and freeze them at high SNR.
    """
    if fd_scale <= 0:
        raise ValueError("fd_scale must be positive")
    r = np.asarray(r, dtype=complex)
    h = fd_scale * np.maximum(1.0, np.abs(r))
    f = lambda z: symbol_confidence(c, z, noise_var_eff, clip=False)  # noqa: E731
    gx = (f(r + h) - f(r - h)) / (2 * h)
    gy = (f(r + 1j * h) - f(r - 1j * h)) / (2 * h)
    return gx + 1j * gy


def symbol_weights(profile: VulnerabilityProfile | None, symbol_vns: np.ndarray, e: float) -> np.ndarray:
    """1 + e for symbols carrying any vulnerable node, 1 elsewhere."""
    if profile is None or e == 0:
        return np.ones(symbol_vns.shape[0])
    in_t = profile.mask()[symbol_vns].any(axis=1)
    return 1.0 + e * in_t


def attack_step(frame: SignalFrame, weights: np.ndarray, c: Constellation, ch: ChannelParams,
                eta: float, cfg: VsAttackConfig) -> np.ndarray:
    """Apply one step in place and return the step vector."""
    # confidence is a function of y / |h|; the chain rule factor 1/|h| is
    # positive and cancels in the normalized direction
    grad = fd_gradient(c, frame.y / ch.h_mag, ch.noise_var_eff, cfg.fd_scale)
    step = eta * weights * (-grad) / (np.abs(grad) + cfg.eps_div)
    frame.y = frame.y + step
    return step


def run_vs_attack(x, frame: SignalFrame, link: ClassicalLink, ch: ChannelParams,
                  profile: VulnerabilityProfile | None, cfg: VsAttackConfig,
                  trace: Callable[[dict], None] | None = None) -> AttackResult:
    if cfg.eta_step is None:
        eta = 0.01 * math.sqrt(float(np.mean(np.abs(frame.clean) ** 2)))
    else:
        eta = cfg.eta_step
    weights = symbol_weights(profile, link.symbol_vns(), cfg.extra_weight_e)

    def reached(rx) -> bool:
        if cfg.stop == "decode_failure":
            return not rx.converged
        return rx.distortion >= cfg.target_distortion

    rx = link.receive(x, frame.y, ch)
    dist = [rx.distortion]
    if trace:
        trace({"step": 0, "power": frame.power, "confidence": float(
            symbol_confidence(link.const, frame.y / ch.h_mag, ch.noise_var_eff).sum()),
            "converged": rx.converged, "distortion": rx.distortion})
    if reached(rx):
        return AttackResult(0.0, 0, True, dist, rx.distortion, frame.s)
    for t in range(1, cfg.max_steps + 1):
        attack_step(frame, weights, link.const, ch, eta, cfg)
        rx = link.receive(x, frame.y, ch)
        dist.append(rx.distortion)
        if trace:
            trace({"step": t, "power": frame.power, "confidence": float(
                symbol_confidence(link.const, frame.y / ch.h_mag, ch.noise_var_eff).sum()),
                "converged": rx.converged, "distortion": rx.distortion})
        if reached(rx):
            return AttackResult(frame.power, t, True, dist, rx.distortion, frame.s)
    return AttackResult(frame.power, cfg.max_steps, False, dist, rx.distortion, frame.s)


def jsonl_writer(fh, **context) -> Callable[[dict], None]:
    """Trace callback writing one JSON object per line, tagged with ``context``."""
    def write(rec: dict) -> None:
        fh.write(json.dumps({**context, **rec}, sort_keys=True) + "\n")
    return write
