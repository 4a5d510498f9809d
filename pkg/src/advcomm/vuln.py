"""Offline Tanner-graph vulnerability scoring and vulnerable-set selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_math import svd
from .ldpc import ParameterError, ParityCheckMatrix

DEFAULT_WEIGHTS = (0.0, 1.0, 0.35, 0.25)


@dataclass(frozen=True)
class VulnerabilityProfile:
    phi_deg: np.ndarray
    phi_hop: np.ndarray
    phi_cyc: np.ndarray
    phi_svd: np.ndarray
    phi: np.ndarray
    tau: float
    vulnerable_set: tuple[int, ...]
    weights: tuple[float, float, float, float]
    k_svd: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.phi)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.vulnerable_set)] = True
        return m

    def report(self) -> str:
        lines = [
            f"# n={self.n} tau={self.tau:.12g} |T|={len(self.vulnerable_set)} "
            f"weights={','.join(f'{w:g}' for w in self.weights)} k_svd={self.k_svd}",
            "node,deg,hop,cyc,svd,phi,in_T",
        ]
        T = set(self.vulnerable_set)
        for i in range(self.n):
            lines.append(
                f"{i},{self.phi_deg[i]:g},{self.phi_hop[i]:g},{self.phi_cyc[i]:g},"
                f"{self.phi_svd[i]:.12g},{self.phi[i]:.12g},{int(i in T)}"
            )
        return "\n".join(lines) + "\n"


def degree_feature(h: ParityCheckMatrix) -> np.ndarray:
    return h.column_weights().astype(float)


def two_hop_feature(h: ParityCheckMatrix) -> np.ndarray:
    d = h.dense.astype(np.int64)
    reach = (d.T @ d) > 0
    np.fill_diagonal(reach, False)
    return reach.sum(axis=1).astype(float)


def shared_checks(h: ParityCheckMatrix) -> np.ndarray:
    """K[i, j] = number of checks shared by variable nodes i and j (diagonal zeroed)."""
    d = h.dense.astype(np.int64)
    k = d.T @ d
    np.fill_diagonal(k, 0)
    return k


def four_cycle_feature(h: ParityCheckMatrix) -> np.ndarray:
    k = shared_checks(h)
    return (k * (k - 1) // 2).sum(axis=1).astype(float)


def _elbow_k(s_nonzero: np.ndarray) -> int:
    r = s_nonzero.size
    if r <= 1:
        return r
    window = math.ceil(r / 4)
    # ratios[k-1] = sigma_{r-k} / sigma_{r-k+1}, the jump above the k smallest
    ratios = np.array([s_nonzero[r - k - 1] / s_nonzero[r - k] for k in range(1, min(window, r - 1) + 1)])
    if ratios.size == 0 or ratios.max() < 1.5:
        return max(1, math.ceil(r / 10))
    return int(np.argmax(ratios)) + 1


def svd_feature(h: ParityCheckMatrix, eps: float = 1e-6, k: int | None = None):
    """Weak-constraint participation over the k smallest nonzero singular values.

    Returns ``(feature, k_used)``. ``k`` defaults to the elbow of the
    singular-value curve.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    d = h.dense.astype(float)
    if not np.any(d):
        return np.zeros(h.n), 0
    _, s, v = svd(d)
    nz = s > 1e-10 * s[0]
    s_nz = s[nz]
    v_nz = v[:, nz]
    r = s_nz.size
    k_used = _elbow_k(s_nz) if k is None else min(k, r)
    cols = np.arange(r - 1, r - 1 - k_used, -1)
    feat = (np.abs(v_nz[:, cols]) / (s_nz[cols] + eps)).sum(axis=1)
    return feat, k_used


def minmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def adaptive_threshold(phi) -> float:
    phi = np.asarray(phi, dtype=float)
    mu, sd = phi.mean(), phi.std()
    p70, p85, p95 = np.percentile(phi, [70, 85, 95])
    tau0 = mu + 2 * sd if sd < 0.1 else p85
    return float(min(max(tau0, p70), p95))


def fuse_and_select(features, weights=DEFAULT_WEIGHTS, k_svd: int = 0) -> VulnerabilityProfile:
    """Min-max normalise the four raw features, fuse and threshold.

    ``features`` is ``(deg, hop, cyc, svd)``. Weights are used as given.
    """
    deg, hop, cyc, sv = (np.asarray(f, dtype=float) for f in features)
    n = deg.size
    if n == 0:
        raise ParameterError("no variable nodes")
    if not all(f.size == n for f in (hop, cyc, sv)):
        raise ParameterError("feature lengths differ")
    w = tuple(float(x) for x in weights)
    phi = w[0] * minmax(deg) + w[1] * minmax(hop) + w[2] * minmax(cyc) + w[3] * minmax(sv)
    tau = adaptive_threshold(phi)
    T = tuple(int(i) for i in np.flatnonzero(phi >= tau))
    return VulnerabilityProfile(deg, hop, cyc, sv, phi, tau, T, w, k_svd)  # type: ignore[arg-type]


def analyze(h: ParityCheckMatrix, weights=DEFAULT_WEIGHTS, eps: float = 1e-6) -> VulnerabilityProfile:
    sv, k = svd_feature(h, eps)
    feats = (degree_feature(h), two_hop_feature(h), four_cycle_feature(h), sv)
    return fuse_and_select(feats, weights, k_svd=k)
