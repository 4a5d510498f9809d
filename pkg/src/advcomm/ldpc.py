"""Regular LDPC codes: Gallager construction, GF(2) encoding, sum-product decoding."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from .core_math import RngStream

log = logging.getLogger(__name__)

LLR_CLIP = 25.0


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary m x n matrix; ``rows[c]`` lists the variable nodes of check c."""

    m: int
    n: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.rows) != self.m:
            raise ParameterError("row list length must equal m")
        for r in self.rows:
            if len(set(r)) != len(r):
                raise ParameterError("duplicate variable index within a check")
            if any(i < 0 or i >= self.n for i in r):
                raise ParameterError("variable index out of range")

    @classmethod
    def from_dense(cls, h) -> "ParityCheckMatrix":
        h = np.asarray(h) % 2
        m, n = h.shape
        return cls(m, n, tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in h))

    @cached_property
    def dense(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        for c, r in enumerate(self.rows):
            h[c, list(r)] = 1
        h.setflags(write=False)
        return h

    @cached_property
    def cols(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for c, r in enumerate(self.rows):
            for v in r:
                out[v].append(c)
        return tuple(tuple(x) for x in out)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(check, variable) index arrays, sorted by check then variable."""
        chk = np.array([c for c, r in enumerate(self.rows) for _ in r], dtype=np.int64)
        var = np.array([v for r in self.rows for v in sorted(r)], dtype=np.int64)
        return chk, var

    def column_weights(self) -> np.ndarray:
        return np.array([len(c) for c in self.cols])

    def row_weights(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows])


@dataclass(frozen=True)
class GeneratorMatrix:
    """Systematic generator in permuted coordinates.

    A codeword in permuted order is ``[u, u @ parity]``; ``perm[j]`` is the
    original position of permuted coordinate j, so ``perm[:k]`` are the
    information positions of the original codeword.
    """

    k: int
    n: int
    parity: np.ndarray  # k x (n-k), uint8
    perm: np.ndarray

    @property
    def info_positions(self) -> np.ndarray:
        return self.perm[: self.k]

    @property
    def dense(self) -> np.ndarray:
        g_perm = np.concatenate([np.eye(self.k, dtype=np.uint8), self.parity], axis=1)
        g = np.zeros_like(g_perm)
        g[:, self.perm] = g_perm
        return g


def _parse_rate(rate) -> Fraction:
    r = Fraction(rate).limit_denominator(64)
    if not 0 < r < 1:
        raise ParameterError(f"rate must lie in (0, 1), got {rate}")
    return r


def build_regular_ldpc(n: int, rate, col_weight: int, rng: RngStream,
                       max_tries: int = 200) -> ParityCheckMatrix:
    """Gallager (col_weight, row_weight) regular code.

    The first band holds ``n / row_weight`` checks over consecutive columns;
    the remaining bands are random column permutations of it. 4-cycles are
    deliberately kept. Repeated column patterns are redrawn when the band
    sizes leave enough distinct patterns, otherwise accepted.
    """
    r = _parse_rate(rate)
    m_frac = (1 - r) * n
    if m_frac.denominator != 1:
        raise ParameterError(f"m=(1-rate)*n is not an integer for n={n}, rate={r}")
    m = int(m_frac)
    wr_frac = Fraction(col_weight) / (1 - r)
    if wr_frac.denominator != 1:
        raise ParameterError(f"row weight col_weight/(1-rate) is not an integer")
    wr = int(wr_frac)
    if col_weight < 1 or wr > n or n % wr:
        raise ParameterError(f"n={n} must be a multiple of the row weight {wr}")
    band = n // wr
    patterns_possible = band ** col_weight >= n
    best = None
    for _ in range(max_tries):
        rows = [tuple(range(i * wr, (i + 1) * wr)) for i in range(band)]
        for _b in range(1, col_weight):
            p = rng.gen.permutation(n)
            rows.extend(tuple(sorted(int(x) for x in p[i * wr:(i + 1) * wr]))
                        for i in range(band))
        h = ParityCheckMatrix(m, n, tuple(rows))
        best = h
        if not patterns_possible:
            break
        if len({c for c in h.cols}) == n:
            break
    assert best is not None
    return best


def _gf2_rref(h: np.ndarray):
    a = (np.asarray(h) % 2).astype(np.uint8).copy()
    m, n = a.shape
    pivots = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        nz = np.flatnonzero(a[row:, col])
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            a[[row, piv]] = a[[piv, row]]
        others = np.flatnonzero(a[:, col])
        others = others[others != row]
        a[others] ^= a[row]
        pivots.append(col)
        row += 1
    return a[:row], pivots


def gf2_rank(h: np.ndarray) -> int:
    return len(_gf2_rref(h)[1])


def to_generator(h: ParityCheckMatrix) -> tuple[GeneratorMatrix, np.ndarray]:
    """Systematic generator via GF(2) elimination; dependent checks are dropped."""
    a, pivots = _gf2_rref(h.dense)
    rank = len(pivots)
    if rank < h.m:
        log.info("parity-check matrix has %d dependent rows; k=%d", h.m - rank, h.n - rank)
    k = h.n - rank
    pivot_set = set(pivots)
    free = [c for c in range(h.n) if c not in pivot_set]
    perm = np.array(free + list(pivots), dtype=np.int64)
    # a[:, pivots] is the identity, so pivot bit i equals sum of free bits in row i
    parity = a[:, free].T.copy().astype(np.uint8)
    g = GeneratorMatrix(k=k, n=h.n, parity=parity, perm=perm)
    return g, perm


def encode(g: GeneratorMatrix, info_bits) -> np.ndarray:
    u = np.asarray(info_bits, dtype=np.uint8)
    if u.shape != (g.k,):
        raise ParameterError(f"expected {g.k} information bits, got {u.shape}")
    cw_perm = np.concatenate([u, (u.astype(np.int64) @ g.parity) % 2]).astype(np.uint8)
    c = np.empty(g.n, dtype=np.uint8)
    c[g.perm] = cw_perm
    return c


def syndrome(h: ParityCheckMatrix, bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    if b.shape != (h.n,):
        raise ParameterError("bit vector length must equal n")
    chk, var = h.edges
    return (np.bincount(chk, weights=b[var], minlength=h.m).astype(np.int64) % 2).astype(np.uint8)


def bp_decode(h: ParityCheckMatrix, llr, max_iters: int = 50):
    """Log-domain sum-product decoding with the tanh rule.

    Returns ``(bits, converged, iters_used)``. Messages are clipped to
    +/-25. Positive LLR means bit 0. A posterior of exactly zero counts as
    an erasure and prevents a convergence claim.
    """
    L = np.clip(np.asarray(llr, dtype=float), -LLR_CLIP, LLR_CLIP)
    if L.shape != (h.n,):
        raise ParameterError("LLR vector length must equal n")
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    chk, var = h.edges
    starts = np.flatnonzero(np.r_[True, chk[1:] != chk[:-1]])
    seg_len = np.diff(np.r_[starts, chk.size])
    v2c = L[var].copy()
    total = L.copy()
    bits = (total < 0).astype(np.uint8)
    for it in range(1, max_iters + 1):
        t = np.tanh(0.5 * v2c)
        mag = np.log(np.maximum(np.abs(t), 1e-300))
        neg = (t < 0).astype(np.int64)
        mag_sum = np.add.reduceat(mag, starts)
        neg_sum = np.add.reduceat(neg, starts)
        ext_mag = np.exp(np.repeat(mag_sum, seg_len) - mag)
        ext_sign = 1 - 2 * ((np.repeat(neg_sum, seg_len) - neg) % 2)
        # single-edge checks carry no extrinsic information
        ext_mag[np.repeat(seg_len, seg_len) == 1] = 0.0
        prod = np.minimum(ext_mag, 1.0 - 1e-15) * ext_sign
        c2v = np.clip(2.0 * np.arctanh(prod), -LLR_CLIP, LLR_CLIP)
        total = L + np.bincount(var, weights=c2v, minlength=h.n)
        v2c = np.clip(total[var] - c2v, -LLR_CLIP, LLR_CLIP)
        bits = (total < 0).astype(np.uint8)
        if not np.any(total == 0) and not np.any(syndrome(h, bits)):
            return bits, True, it
    return bits, False, max_iters


def write_alist(h: ParityCheckMatrix, path) -> None:
    cw = h.column_weights()
    rw = h.row_weights()
    lines = [f"{h.n} {h.m}", f"{cw.max(initial=0)} {rw.max(initial=0)}",
             " ".join(map(str, cw)), " ".join(map(str, rw))]
    lines += [" ".join(str(c + 1) for c in col) for col in h.cols]
    lines += [" ".join(str(v + 1) for v in sorted(r)) for r in h.rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> ParityCheckMatrix:
    tokens = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    n, m = int(tokens[0][0]), int(tokens[0][1])
    row_lines = tokens[4 + n:4 + n + m]
    if len(row_lines) == m:
        rows = tuple(tuple(sorted(int(x) - 1 for x in ln if int(x) > 0)) for ln in row_lines)
    else:
        acc: list[list[int]] = [[] for _ in range(m)]
        for v, ln in enumerate(tokens[4:4 + n]):
            for x in ln:
                if int(x) > 0:
                    acc[int(x) - 1].append(v)
        rows = tuple(tuple(sorted(r)) for r in acc)
    return ParityCheckMatrix(m, n, rows)
