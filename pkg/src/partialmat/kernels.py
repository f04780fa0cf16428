"""Vectorised numeric cores of the catalog checks.

Inputs are stacks of shape (T, d, d): T independent operands of one block
shape (n, k).  Every kernel returns per-input arrays, so a whole batch of suite
trials costs one LAPACK call per quantity.  The single-input checks in
``catalog`` run through the same kernels with T = 1, which keeps the two
routes bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import min_eigenvalues
from .tolerance import Tolerance


# ------------------------------------------------------------- block algebra


def blocks(x: np.ndarray, n: int, k: int) -> np.ndarray:
    """(T, n, n, k, k) view with ``[t, i, j] == H_ij`` of input t."""
    return x.reshape(x.shape[0], n, k, n, k).transpose(0, 1, 3, 2, 4)


def realign(x: np.ndarray, n: int, k: int) -> np.ndarray:
    """Realignment of each input; the result has block shape (k, n)."""
    t = x.shape[0]
    return x.reshape(t, n, k, n, k).transpose(0, 2, 1, 4, 3).reshape(t, n * k, n * k)


def diagonal_block_dets(x: np.ndarray, n: int, k: int) -> np.ndarray:
    i = np.arange(n)
    return np.linalg.det(blocks(x, n, k)[:, i, i])


def partial_trace(x: np.ndarray, n: int, k: int, side: int) -> np.ndarray:
    r = x.reshape(x.shape[0], n, k, n, k)
    if side == 1:
        return np.trace(r, axis1=1, axis2=3)
    return np.trace(r, axis1=2, axis2=4)


def partial_det(x: np.ndarray, n: int, k: int, side: int) -> np.ndarray:
    if side == 2:
        return np.linalg.det(blocks(x, n, k))
    return np.linalg.det(blocks(realign(x, n, k), k, n))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Kronecker product of two stacks.

    One complex multiply per entry: unlike ``dense.kron`` this is not bitwise
    commutative, but it is several times faster on large stacks.
    """
    t, (m, n), (p, q) = a.shape[0], a.shape[-2:], b.shape[-2:]
    out = np.empty((t, m, p, n, q), dtype=np.complex128)
    np.multiply(a[:, :, None, :, None], b[:, None, :, None, :], out=out)
    return out.reshape(t, m * p, n * q)


def tensor_power(x: np.ndarray, r: int) -> np.ndarray:
    out = x
    for _ in range(r - 1):
        out = kron(out, x)
    return out


class Batch:
    """Operand stacks ``a``, ``b``, ``c`` with memoised derived quantities.

    A key such as ``"ab"`` names the sum a + b; longer sums are formed left to
    right, so ``"abc"`` is (a + b) + c.
    """

    def __init__(self, n: int, k: int, **stacks: np.ndarray):
        self.n, self.k = n, k
        self._stacks = dict(stacks)
        self._memo: dict = {}

    @property
    def size(self) -> int:
        return next(iter(self._stacks.values())).shape[0]

    def stack(self, key: str) -> np.ndarray:
        if key not in self._stacks:
            self._stacks[key] = self.stack(key[:-1]) + self.stack(key[-1])
        return self._stacks[key]

    def _cached(self, tag, fn):
        if tag not in self._memo:
            self._memo[tag] = fn()
        return self._memo[tag]

    def realign(self, key: str) -> np.ndarray:
        return self._cached(("realign", key), lambda: realign(self.stack(key), self.n, self.k))

    def det(self, key: str) -> np.ndarray:
        return self._cached(("det", key), lambda: np.linalg.det(self.stack(key)).real)

    def diag_dets(self, key: str, realigned: bool) -> np.ndarray:
        def compute():
            if realigned:
                return diagonal_block_dets(self.realign(key), self.k, self.n).real
            return diagonal_block_dets(self.stack(key), self.n, self.k).real
        return self._cached(("diag", key, realigned), compute)

    def partial_det(self, key: str, side: int) -> np.ndarray:
        def compute():
            if side == 1:
                return np.linalg.det(blocks(self.realign(key), self.k, self.n))
            return partial_det(self.stack(key), self.n, self.k, 2)
        return self._cached(("pdet", key, side), compute)

    def partial_trace(self, key: str, side: int) -> np.ndarray:
        return self._cached(("ptr", key, side),
                            lambda: partial_trace(self.stack(key), self.n, self.k, side))

    def tensor_power(self, key: str, r: int) -> np.ndarray:
        if r == 1:
            return self.stack(key)
        return self._cached(("tpow", key, r),
                            lambda: kron(self.tensor_power(key, r - 1), self.stack(key)))


# ---------------------------------------------------------------- outcomes


@dataclass
class Outcome:
    """Per-input margins and tolerance bounds of one check over a batch."""

    margin: np.ndarray
    bound: np.ndarray
    lhs: Optional[np.ndarray] = None
    rhs: Optional[np.ndarray] = None
    matrix: bool = False


def _bound(tol: Tolerance, scale: np.ndarray) -> np.ndarray:
    return tol.abs + tol.rel * np.maximum(1.0, scale)


def product_with_log(values: np.ndarray):
    """Row products, with the sum of logs where every factor is positive (else NaN)."""
    pos = values > 0
    logs = np.sum(np.log(np.where(pos, values, 1.0)), axis=-1)
    return np.prod(values, axis=-1), np.where(np.all(pos, axis=-1), logs, np.nan)


def powered(base: np.ndarray, power: int):
    """base**power, with power*log(base) where base > 0 (else NaN)."""
    pos = base > 0
    logs = power * np.log(np.where(pos, base, 1.0))
    return base ** power, np.where(pos, logs, np.nan)


def scalar_outcome(lhs, rhs, tol: Tolerance, log_lhs=None) -> Outcome:
    """lhs - rhs; through the log domain where log_lhs is known and rhs > tol.abs."""
    if log_lhs is None:
        margin = lhs - rhs
    else:
        use_log = ~np.isnan(log_lhs) & (rhs > tol.abs)
        safe_log = np.where(use_log, log_lhs, 0.0)
        safe_rhs = np.where(use_log, rhs, 1.0)
        margin = np.where(use_log, rhs * np.expm1(safe_log - np.log(safe_rhs)), lhs - rhs)
        lhs = np.where(use_log, np.exp(safe_log), lhs)
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    return Outcome(margin, _bound(tol, scale), lhs, rhs)


def matrix_outcome(plus: list, minus: list, tol: Tolerance) -> Outcome:
    """λ_min(sum(plus) - sum(minus)): the Loewner slack of plus >= minus."""
    lhs = plus[0]
    for p in plus[1:]:
        lhs = lhs + p
    rhs = minus[0]
    for m in minus[1:]:
        rhs = rhs + m
    margin = min_eigenvalues(lhs - rhs)
    scale = np.maximum(np.abs(lhs).max(axis=(-2, -1)), np.abs(rhs).max(axis=(-2, -1)))
    return Outcome(margin, _bound(tol, scale), matrix=True)


# ------------------------------------------------------------------ checks


def fischer(bt: Batch, realigned: bool, tol: Tolerance) -> Outcome:
    lhs, log_lhs = product_with_log(bt.diag_dets("a", realigned))
    return scalar_outcome(lhs, bt.det("a"), tol, log_lhs)


def thompson(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    lhs = np.linalg.det(bt.partial_det("a", side)).real
    return scalar_outcome(lhs, bt.det("a"), tol)


def fiedler_markham(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    n, k = bt.n, bt.k
    traced = np.linalg.det(bt.partial_trace("a", side)).real
    if side == 2:
        lhs, log_lhs = powered(traced / k ** n, k)
    else:
        lhs, log_lhs = powered(traced / n ** k, n)
    return scalar_outcome(lhs, bt.det("a"), tol, log_lhs)


def choi(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    size = bt.k if side == 1 else bt.n
    base = np.trace(bt.partial_det("a", side), axis1=-2, axis2=-1).real / size
    lhs, log_lhs = powered(base, size)
    return scalar_outcome(lhs, bt.det("a"), tol, log_lhs)


def mean_bounds(bt: Batch, which: str, tol: Tolerance) -> Outcome:
    n, k = bt.n, bt.k
    dets = bt.diag_dets("a", True)
    pos = np.all(dets > 0, axis=-1)
    # determinants that round below zero count as zero in the geometric mean
    geo = np.where(pos, np.exp(np.mean(np.log(np.where(dets > 0, dets, 1.0)), axis=-1)), 0.0)
    if which == "fan_ky":
        summed = partial_trace(bt.realign("a"), k, n, 1)
        return scalar_outcome(np.linalg.det(summed).real, k ** n * geo, tol)
    return scalar_outcome(np.mean(dets, axis=-1), geo, tol)


def proof_chain(bt: Batch, theorem: str, tol: Tolerance) -> tuple[Outcome, Outcome]:
    """(upper, lower) gaps of  bound >= prod_l det G_ll >= det H."""
    k, n = bt.k, bt.n
    if theorem == "fiedler_markham":
        base = np.linalg.det(bt.partial_trace("a", 2)).real / k ** n
    else:
        base = np.trace(bt.partial_det("a", 1), axis1=-2, axis2=-1).real / k
    middle, log_middle = product_with_log(bt.diag_dets("a", True))
    lhs, log_lhs = powered(base, k)
    return (scalar_outcome(lhs, middle, tol, log_lhs),
            scalar_outcome(middle, bt.det("a"), tol, log_middle))


def superadd(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    pd = bt.partial_det
    return matrix_outcome([pd("ab", side)], [pd("a", side), pd("b", side)], tol)


def tensor_three(bt: Batch, r: int, tol: Tolerance) -> Outcome:
    tp = bt.tensor_power
    return matrix_outcome([tp("abc", r), tp("a", r), tp("b", r), tp("c", r)],
                          [tp("ab", r), tp("ac", r), tp("bc", r)], tol)


def tensor_two_common(bt: Batch, r: int, tol: Tolerance) -> Outcome:
    tp = bt.tensor_power
    return matrix_outcome([tp("abc", r), tp("c", r)], [tp("ac", r), tp("bc", r)], tol)


def det_three(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    pd = bt.partial_det
    return matrix_outcome([pd("abc", side), pd("a", side), pd("b", side), pd("c", side)],
                          [pd("ab", side), pd("ac", side), pd("bc", side)], tol)


def det_three_common(bt: Batch, side: int, tol: Tolerance) -> Outcome:
    pd = bt.partial_det
    return matrix_outcome([pd("abc", side), pd("c", side)], [pd("ac", side), pd("bc", side)], tol)


def psd_screen(x: np.ndarray, tol: Tolerance):
    """(Hermitian deviation, λ_min, bound) per input, as used by ``is_psd``."""
    dev = np.abs(x - np.conj(np.swapaxes(x, -1, -2))).max(axis=(-2, -1))
    bound = _bound(tol, np.abs(x).max(axis=(-2, -1)))
    return dev, min_eigenvalues(x), bound
