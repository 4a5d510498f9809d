"""Gradient attacks on a differentiable decoder: progressive ascent and C&W."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nn import DenseNetwork
from .results import AttackResult


@dataclass(frozen=True)
class PgaConfig:
    alpha: float = 0.1
    eps_norm: float = 1e-8
    max_iters: int = 10000
    target_distortion: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0 or self.eps_norm <= 0:
            raise ValueError("alpha and eps_norm must be positive")


@dataclass(frozen=True)
class CwConfig:
    c_init: float = 1.0
    c_min: float = 1e-6
    c_max: float = 100.0
    lr: float = 0.01
    max_iters: int = 2000
    rounds: int = 8
    kappa: float = 0.0
    target_distortion: float = 0.1

    def __post_init__(self):
        if not self.c_min <= self.c_init <= self.c_max:
            raise ValueError("need c_min <= c_init <= c_max")
        if self.lr <= 0 or self.rounds < 1:
            raise ValueError("lr must be positive and rounds >= 1")


def distortion(g: DenseNetwork, x, y) -> float:
    e = g(np.asarray(y, dtype=float)) - np.asarray(x, dtype=float)
    return float(e @ e)


def distortion_gradient(g: DenseNetwork, x, y) -> np.ndarray:
    """Gradient of ||x - g(y)||^2 with respect to y (ascent increases distortion)."""
    y = np.asarray(y, dtype=float)
    return g.vjp(y, 2.0 * (g(y) - np.asarray(x, dtype=float)))


def pga_run(g: DenseNetwork, x, r, cfg: PgaConfig,
            trace: Callable[[dict], None] | None = None) -> AttackResult:
    """Normalized-gradient ascent from ``r`` until the distortion reaches the target.

    ``extras`` holds ``y_history`` (y^(1) = r, ...) and ``coefs``, the scalar
    a_t = 2 alpha / (||grad_t|| + eps) so that step t equals
    a_t * J_t^T (g(y_t) - x).
    """
    r = np.asarray(r, dtype=float)
    y = r.copy()
    d = distortion(g, x, y)
    trace_d = [d]
    ys, coefs = [y.copy()], []
    if trace:
        trace({"iter": 0, "distortion": d, "power": 0.0})
    if d >= cfg.target_distortion:
        return AttackResult(0.0, 0, True, trace_d, d, np.zeros_like(r), {"y_history": ys, "coefs": coefs})
    for t in range(1, cfg.max_iters + 1):
        grad = distortion_gradient(g, x, y)
        nrm = float(np.linalg.norm(grad))
        y = y + cfg.alpha * grad / (nrm + cfg.eps_norm)
        coefs.append(2.0 * cfg.alpha / (nrm + cfg.eps_norm))
        ys.append(y.copy())
        d = distortion(g, x, y)
        trace_d.append(d)
        s = y - r
        rho = float(s @ s)
        if trace:
            trace({"iter": t, "distortion": d, "power": rho})
        if d >= cfg.target_distortion:
            return AttackResult(rho, t, True, trace_d, d, s, {"y_history": ys, "coefs": coefs})
    s = y - r
    return AttackResult(float(s @ s), cfg.max_iters, False, trace_d, d, s, {"y_history": ys, "coefs": coefs})


def closed_form_perturbation(g: DenseNetwork, x, y_history, coefs, t: int) -> np.ndarray:
    """Product-form expression for the t-th ascent step (t >= 1).

    s_t = a_t J_t^T (I + a_{t-1} J_{t-1} J_{t-1}^T) ... (I + a_1 J_1 J_1^T) (g(y_1) - x)

    Exact for linear decoders, first-order accurate otherwise.
    """
    if t < 1:
        raise ValueError("t counts from 1")
    x = np.asarray(x, dtype=float)
    e = g(np.asarray(y_history[0], dtype=float)) - x
    for i in range(1, t):
        J = g.jacobian(y_history[i - 1])
        e = e + coefs[i - 1] * (J @ (J.T @ e))
    J = g.jacobian(y_history[t - 1])
    return coefs[t - 1] * (J.T @ e)


def _batch_distortion_grad(g: DenseNetwork, X: np.ndarray, Y: np.ndarray):
    out, cache = g.forward(Y, keep=True)
    err = out - X
    _, grad = g.backward(cache, 2.0 * err, need_params=False)
    return np.sum(err * err, axis=1), grad


def cw_batch(g: DenseNetwork, X, R, cfg: CwConfig) -> list[AttackResult]:
    """C&W over a batch of independent frames (rows of ``X`` and ``R``).

    Every frame keeps its own regularization constant and Adam state; the
    frames only share the vectorized forward/backward passes.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    B = R.shape[0]
    D_star = cfg.target_distortion
    d0, _ = _batch_distortion_grad(g, X, R)
    best_rho = np.where(d0 >= D_star, 0.0, np.inf)
    best_s = np.zeros_like(R)
    best_d = d0.copy()
    c = np.full(B, cfg.c_init)
    active = d0 < D_star
    b1, b2, eps = 0.9, 0.999, 1e-8
    curves: list[list[float]] = [[] for _ in range(B)]
    for _rnd in range(cfg.rounds):
        s = np.zeros_like(R)
        m = np.zeros_like(R)
        v = np.zeros_like(R)
        hit = np.zeros(B, dtype=bool)
        for it in range(1, cfg.max_iters + 1):
            d, gd = _batch_distortion_grad(g, X, R + s)
            ok = (d >= D_star) & active
            hit |= ok
            rho = np.sum(s * s, axis=1)
            better = ok & (rho < best_rho)
            best_rho[better] = rho[better]
            best_s[better] = s[better]
            best_d[better] = d[better]
            hinge = (D_star - d) > -cfg.kappa
            grad = 2.0 * s - (c * hinge)[:, None] * gd
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            s = s - cfg.lr * (m / (1 - b1**it)) / (np.sqrt(v / (1 - b2**it)) + eps)
        for i in range(B):
            curves[i].append(float(best_rho[i]))
        c = np.where(hit, np.maximum(c / 2, cfg.c_min), np.minimum(c * 2, cfg.c_max))
    steps = cfg.rounds * cfg.max_iters
    out = []
    for i in range(B):
        if not active[i]:
            out.append(AttackResult(0.0, 0, True, [float(d0[i])], float(d0[i]), np.zeros(R.shape[1])))
        elif np.isfinite(best_rho[i]):
            out.append(AttackResult(float(best_rho[i]), steps, True, curves[i], float(best_d[i]), best_s[i].copy()))
        else:
            out.append(AttackResult(math.inf, steps, False, curves[i], float(d0[i]), None))
    return out


def cw_run(g: DenseNetwork, x, r, cfg: CwConfig) -> AttackResult:
    """min ||s||^2 + c * max(D* - D(x, g(r + s)), -kappa) with an Adam inner loop.

    Each round restarts from s = 0; c is halved after a round that reached the
    target and doubled otherwise, within [c_min, c_max]. The smallest
    successful perturbation seen at any iteration is returned; a frame that
    never reaches the target reports ``rho_star = inf``.
    """
    return cw_batch(g, np.asarray(x, dtype=float)[None, :], np.asarray(r, dtype=float)[None, :], cfg)[0]
