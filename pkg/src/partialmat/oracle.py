"""Deliberately naive reference implementations for cross-checking.

Nothing here imports the fast paths in ``dense`` or ``block``; the point is to
agree with them by an independent route.  Only meant for small inputs.
"""
from __future__ import annotations

import numpy as np

from .errors import DimTooLarge

LAPLACE_MAX_DIM = 8
COMPOUND_MAX_ENTRIES = 64


def _rows(a) -> list[list[complex]]:
    arr = np.asarray(a, dtype=np.complex128)
    return [[complex(x) for x in row] for row in arr]


def _laplace(rows: list[list[complex]]) -> complex:
    size = len(rows)
    if size == 1:
        return rows[0][0]
    if size == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = 0j
    for col in range(size):
        if rows[0][col] == 0:
            continue
        minor = [row[:col] + row[col + 1:] for row in rows[1:]]
        sign = -1 if col % 2 else 1
        total += sign * rows[0][col] * _laplace(minor)
    return total


def det_laplace(a) -> complex:
    """Determinant by cofactor expansion along the first row."""
    rows = _rows(a)
    if len(rows) > LAPLACE_MAX_DIM:
        raise DimTooLarge(f"cofactor expansion limited to dim <= {LAPLACE_MAX_DIM}")
    return _laplace(rows)


def _lex_subsets(dim: int, r: int, start: int = 0) -> list[list[int]]:
    if r == 0:
        return [[]]
    out = []
    for first in range(start, dim - r + 1):
        for rest in _lex_subsets(dim, r - 1, first + 1):
            out.append([first] + rest)
    return out


def compound_minors(a, r: int) -> np.ndarray:
    """Compound matrix assembled minor by minor with ``det_laplace``."""
    rows = _rows(a)
    dim = len(rows)
    subs = _lex_subsets(dim, r)
    if len(subs) > COMPOUND_MAX_ENTRIES:
        raise DimTooLarge(f"C({dim}, {r}) = {len(subs)} exceeds {COMPOUND_MAX_ENTRIES}")
    out = np.zeros((len(subs), len(subs)), dtype=np.complex128)
    for s_idx, s in enumerate(subs):
        for t_idx, t in enumerate(subs):
            out[s_idx, t_idx] = _laplace([[rows[i][j] for j in t] for i in s])
    return out


def realign_bruteforce(h) -> np.ndarray:
    """H~ by writing h^{i,j}_{l,m} to position (l*n + i, m*n + j), one entry at a time.

    ``h`` is anything with ``n``, ``k`` and ``mat`` attributes (a BlockMat).
    """
    n, k = h.n, h.k
    src = np.asarray(h.mat, dtype=np.complex128)
    out = np.zeros_like(src)
    for i in range(n):
        for j in range(n):
            for l in range(k):
                for m in range(k):
                    out[l * n + i, m * n + j] = src[i * k + l, j * k + m]
    return out


def kron_index(a, b) -> np.ndarray:
    """Kronecker product from the index formula (i*p + l, j*q + m) -> a_ij * b_lm.

    Products use the textbook (re, im) expansion in plain float arithmetic.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    p, q = b.shape
    out = np.zeros((a.shape[0] * p, a.shape[1] * q), dtype=np.complex128)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for l in range(p):
                for m in range(q):
                    x, y = complex(a[i, j]), complex(b[l, m])
                    out[i * p + l, j * q + m] = complex(
                        x.real * y.real - x.imag * y.imag,
                        x.real * y.imag + x.imag * y.real,
                    )
    return out
