"""Attack-power bounds for semantic and separation-based systems.

Units: ``N`` real channel dimensions, ``sigma_w2`` noise variance per real
dimension, ``eta`` the per-dimension SNR, distortions are total squared
error ||x - x_hat||^2. All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln


class RegimeIIIError(ValueError):
    """D* >= M * Theta_x: the separation bound has no finite positive value."""


@dataclass(frozen=True)
class SystemParams:
    M: int
    N: int
    sigma_w2: float
    eta: float
    G: float
    theta_x: float
    D_star: float

    def __post_init__(self):
        for name in ("M", "N", "sigma_w2", "eta", "G", "theta_x", "D_star"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def noise_energy(self) -> float:
        return self.N * self.sigma_w2

    def boundaries(self) -> tuple[float, float]:
        top = self.M * self.theta_x
        return top * (self.eta + 1) ** (-self.N / self.M), top


class RegimeReport(NamedTuple):
    regime: str
    lhs: float
    rhs: float
    condition_holds: bool
    boundaries: tuple[float, float]


def capacity(p: SystemParams, attack_power: float = 0.0) -> float:
    """Capacity in nats with the attack treated as extra Gaussian noise."""
    nse = p.noise_energy
    return 0.5 * p.N * math.log1p(p.eta * nse / (nse + attack_power))


def rate_distortion_lower(p: SystemParams, D: float) -> float:
    return 0.5 * p.M * math.log(p.M * p.theta_x / D)


def distortion_floor(p: SystemParams, attack_power: float) -> float:
    """Smallest distortion a separation system can reach under the given attack power."""
    return p.M * p.theta_x / (1 + p.eta * p.N / (p.N + attack_power / p.sigma_w2)) ** (p.N / p.M)


def sem_attack_lower_bound(p: SystemParams) -> float:
    gap = math.sqrt(p.D_star) / p.G - math.sqrt(p.noise_energy)
    return gap * gap if gap > 0 else 0.0


def _sscc_rhs(p: SystemParams) -> float:
    ratio = p.M * p.theta_x / p.D_star
    if ratio == 1.0:
        return -math.inf
    # expm1 keeps precision when M/N is small and the ratio is near 1
    denom = math.expm1((p.M / p.N) * math.log(ratio))
    return (p.eta / denom - 1.0) * p.noise_energy


def sscc_attack_upper_bound(p: SystemParams) -> float:
    """May be negative (Regime I). Raises ``RegimeIIIError`` when D* >= M*Theta_x."""
    if p.D_star >= p.M * p.theta_x:
        raise RegimeIIIError(f"D*={p.D_star} >= M*Theta_x={p.M * p.theta_x}")
    return _sscc_rhs(p)


def robustness_condition(p: SystemParams) -> RegimeReport:
    lo, hi = p.boundaries()
    if p.D_star < lo:
        regime = "I"
    elif p.D_star < hi:
        regime = "II"
    else:
        regime = "III"
    lhs = sem_attack_lower_bound(p)
    rhs = _sscc_rhs(p)
    return RegimeReport(regime, lhs, rhs, lhs >= rhs, (lo, hi))


def entropy_power_gaussian(variance_per_dim: float) -> float:
    # H = (M/2) ln(2 pi e v) for i.i.d. coordinates, so the entropy power is v
    if variance_per_dim <= 0:
        raise ValueError("variance must be positive")
    return float(variance_per_dim)


def knn_entropy(samples, k: int = 1) -> float:
    """Kozachenko-Leonenko differential entropy estimate in nats."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n <= k:
        raise ValueError("need more samples than neighbors")
    dist, _ = cKDTree(x).query(x, k=k + 1)
    r = dist[:, k]
    r = r[r > 0]
    log_ball = (d / 2) * math.log(math.pi) - gammaln(d / 2 + 1)
    return float(digamma(n) - digamma(k) + log_ball + d * np.mean(np.log(r)))


def entropy_power_estimate(samples, k: int = 1) -> float:
    """Approximate entropy power of a sample (non-Gaussian sources)."""
    x = np.asarray(samples, dtype=float)
    M = 1 if x.ndim == 1 else x.shape[1]
    return math.exp(2 * knn_entropy(x, k) / M) / (2 * math.pi * math.e)


class DSem0Prediction(NamedTuple):
    prediction: float
    bound: float


def d_sem0_predict(singular_values_per_sample, sigma_w2: float, N: int, G_hat: float) -> DSem0Prediction:
    """Noise-induced distortion sigma^2 E[sum_i s_i^2] and its ceiling N sigma^2 G^2."""
    energy = [float(np.sum(np.square(s))) for s in singular_values_per_sample]
    if not energy:
        raise ValueError("no samples")
    return DSem0Prediction(sigma_w2 * float(np.mean(energy)), N * sigma_w2 * G_hat**2)
