"""Numerical substrate: seeded random streams, Jacobi SVD and spectral norms."""

from __future__ import annotations

from typing import Sequence

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    ``stream_id`` may be an int or a tuple of ints; distinct ids give
    independent generators (numpy ``SeedSequence`` spawn keys), so no state is
    shared between streams.
    """

    def __init__(self, seed: int, stream_id: int | Sequence[int] = 0):
        self.seed = int(seed)
        if isinstance(stream_id, (int, np.integer)):
            key = (int(stream_id),)
        else:
            key = tuple(int(s) for s in stream_id)
        self.stream_id = key
        ss = np.random.SeedSequence(entropy=self.seed & (2**64 - 1), spawn_key=key)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *sub: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(sub))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def gaussian(rng: RngStream, n: int, sigma: float) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return np.zeros(n)
    return sigma * rng.gen.standard_normal(n)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one parallel Jacobi sweep (every column pair exactly once)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _complete_basis(u: np.ndarray, k_valid: int) -> np.ndarray:
    """Replace columns k_valid.. of u with an orthonormal completion."""
    m, k = u.shape
    if k_valid >= k:
        return u
    basis = u[:, :k_valid]
    cur = basis
    for e in range(m):
        if cur.shape[1] == k:
            break
        v = np.zeros(m)
        v[e] = 1.0
        v -= cur @ (cur.T @ v)
        v -= cur @ (cur.T @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cur = np.column_stack([cur, v / nv])
    return cur


def svd(m: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Returns ``(U, s, V)`` with ``m = U @ diag(s) @ V.T``, ``s`` descending.
    Column pairs are rotated in round-robin order, n/2 disjoint pairs at once.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError("svd expects a 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    rows, cols = a.shape
    if rows < cols:
        v, s, u = svd(a.T, tol=tol, max_sweeps=max_sweeps)
        return u, s, v
    if cols == 0:
        return np.zeros((rows, 0)), np.zeros(0), np.zeros((0, 0))
    if rows > cols:
        # rotate the square triangular factor instead of the tall input
        q, r = np.linalg.qr(a)
        ur, s, v = svd(r, tol=tol, max_sweeps=max_sweeps)
        return q @ ur, s, v

    w = a.copy()
    v = np.eye(cols)
    # columns below this energy are round-off of a rank-deficient input
    floor = (1e-14 * np.linalg.norm(a)) ** 2
    schedule = _round_robin(cols)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in schedule:
            if p.size == 0:
                continue
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > floor)
            if not np.any(active):
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t[zeta == 0] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = c * t
            wp, wq = w[:, p], w[:, q]
            w[:, p] = c * wp - sn * wq
            w[:, q] = sn * wp + c * wq
            vp, vq = v[:, p], v[:, q]
            v[:, p] = c * vp - sn * vq
            v[:, q] = sn * vp + c * vq
        if not rotated:
            break
    else:
        s = np.linalg.norm(w, axis=0)
        resid = np.linalg.norm(a - (w @ v.T)) / max(np.linalg.norm(a), 1e-300)
        raise ConvergenceError("Jacobi SVD did not converge", float(resid))

    s = np.linalg.norm(w, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    w = w[:, order]
    v = v[:, order]
    smax = s[0] if s.size else 0.0
    nz = s > max(smax, 1e-300) * 1e-14
    u = np.zeros_like(w)
    u[:, nz] = w[:, nz] / s[nz]
    k_valid = int(np.count_nonzero(nz))
    s[~nz] = 0.0
    u = _complete_basis(u, k_valid)
    return u, s, v


def spectral_norm(m: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value by power iteration on ``m.T @ m``."""
    a = np.asarray(m, dtype=float)
    if a.size == 0 or not np.any(a):
        return 0.0
    gram = a.T @ a
    x = np.random.default_rng(0).standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = float(x @ y)
        x = y / ny
        if abs(new - lam) <= 1e-3 * tol * abs(new):
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))
