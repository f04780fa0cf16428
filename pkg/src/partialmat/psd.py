"""PSD predicate and deterministic generators of PSD block matrices.

Random numbers come from SplitMix64, evaluated in counter form so a whole
batch is one vectorised numpy expression.  For a 64-bit ``seed`` the i-th
output (i = 1, 2, ...) is::

    z = seed + i * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9     (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB     (mod 2**64)
    z =  z ^ (z >> 31)

Uniforms are ``(z >> 11) * 2**-53`` in [0, 1).  Standard normals use
Box-Muller on consecutive pairs (u1, u2): ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``.
A standard complex normal is ``(x + i y) / sqrt(2)`` from two such normals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .block import BlockMat
from .dense import _kron, as_complex_mat, min_eigenvalue, require_hermitian
from .errors import BadSpec
from .tolerance import DEFAULT_TOL, Tolerance

ENSEMBLES = ("ginibre", "wishart_rank_r", "kron_structured", "equality_case", "diag_random")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _splitmix64_rows(seeds: np.ndarray, count: int, offset: int) -> np.ndarray:
    """Outputs ``offset+1 .. offset+count`` for each seed: shape (len(seeds), count)."""
    i = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = seeds[:, None] + i[None, :] * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _seed_array(seeds) -> np.ndarray:
    return np.array([int(s) & _MASK64 for s in seeds], dtype=np.uint64)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Outputs ``offset+1 .. offset+count`` of the SplitMix64 stream for ``seed``."""
    return _splitmix64_rows(_seed_array([seed]), count, offset)[0]


def _splitmix64_first(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed: acc <- first SplitMix64 output of (acc ^ part)."""
    acc = 0
    for p in parts:
        acc = _splitmix64_first(acc ^ (int(p) & _MASK64))
    return acc


class Streams:
    """Sequential readers over several SplitMix64 streams, advanced in lockstep.

    Every draw returns one row per seed.
    """

    def __init__(self, seeds):
        self.seeds = _seed_array(seeds)
        self.pos = 0

    def uniform(self, count: int) -> np.ndarray:
        z = _splitmix64_rows(self.seeds, count, self.pos)
        self.pos += count
        return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, count: int) -> np.ndarray:
        u = self.uniform(2 * count)
        u1, u2 = u[:, 0::2], u[:, 1::2]
        return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)

    def complex_normal(self, rows: int, cols: int) -> np.ndarray:
        x = self.normal(2 * rows * cols)
        z = (x[:, 0::2] + 1j * x[:, 1::2]) / np.sqrt(2.0)
        return z.reshape(len(self.seeds), rows, cols)


class Stream:
    """Sequential reader over one SplitMix64 stream."""

    def __init__(self, seed: int):
        self._rows = Streams([seed])
        self.seed = int(self._rows.seeds[0])

    @property
    def pos(self) -> int:
        return self._rows.pos

    def uniform(self, count: int) -> np.ndarray:
        return self._rows.uniform(count)[0]

    def normal(self, count: int) -> np.ndarray:
        return self._rows.normal(count)[0]

    def complex_normal(self, rows: int, cols: int) -> np.ndarray:
        return self._rows.complex_normal(rows, cols)[0]


@dataclass(frozen=True)
class GenSpec:
    ensemble: str
    n: int
    k: int
    seed: int
    rank: Optional[int] = None

    def validate(self) -> None:
        if self.ensemble not in ENSEMBLES:
            raise BadSpec(f"unknown ensemble {self.ensemble!r}; expected one of {ENSEMBLES}")
        if self.n < 1 or self.k < 1:
            raise BadSpec(f"block dims must be positive, got n={self.n}, k={self.k}")
        if self.rank is not None and not 1 <= self.rank <= self.n * self.k:
            raise BadSpec(f"rank {self.rank} outside [1, {self.n * self.k}]")
        if not 0 <= self.seed <= _MASK64:
            raise BadSpec(f"seed {self.seed} is not a 64-bit unsigned integer")


def is_psd(a, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """(flag, λ_min).  Raises NotHermitian for non-Hermitian input."""
    a = require_hermitian(as_complex_mat(a), tol)
    margin = min_eigenvalue(a)
    return margin >= -tol.bound_for(a), margin


def _gram(g: np.ndarray, norm: int) -> np.ndarray:
    h = g @ np.conj(np.swapaxes(g, -1, -2)) / norm
    return 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))


def generate_many(ensemble: str, n: int, k: int, seeds, rank: Optional[int] = None) -> np.ndarray:
    """Stack of the matrices ``generate`` draws for each seed: shape (len(seeds), nk, nk)."""
    for seed in seeds:
        GenSpec(ensemble, n, k, seed, rank).validate()
    d = n * k
    rs = Streams(seeds)
    if ensemble == "ginibre":
        return _gram(rs.complex_normal(d, d), d)
    if ensemble == "wishart_rank_r":
        rank = rank if rank is not None else max(d - 1, 1)
        return _gram(rs.complex_normal(d, rank), d)
    if ensemble == "kron_structured":
        outer = _gram(rs.complex_normal(n, n), n)
        inner = _gram(rs.complex_normal(k, k), k)
        return _kron(outer, inner)
    if ensemble == "equality_case":
        outer = _gram(rs.complex_normal(n, n), n)
        return _kron(outer, np.eye(k, dtype=np.complex128))
    out = np.zeros((len(rs.seeds), d, d), dtype=np.complex128)
    idx = np.arange(d)
    out[:, idx, idx] = rs.uniform(d)
    return out


def generate(spec: GenSpec) -> BlockMat:
    """Draw the PSD block matrix described by ``spec``; same spec, same bits."""
    spec.validate()
    return BlockMat(spec.n, spec.k, generate_many(spec.ensemble, spec.n, spec.k, [spec.seed],
                                                  spec.rank)[0])
