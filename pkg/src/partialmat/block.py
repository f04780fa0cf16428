"""Block-structured matrices in M_n(M_k).

Indices are 0-based throughout: ``h.entry(i, j, l, m)`` is entry ``(l, m)`` of
block ``H_ij``, stored at row ``i*k + l`` and column ``j*k + m`` of ``h.mat``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dense import as_complex_mat, tensor_power
from .errors import CapExceeded, DimMismatch

DIM_CAP = 4096
SUM_MEMO_SIZE = 8


@dataclass(frozen=True, eq=False)
class BlockMat:
    """An ``(n*k) x (n*k)`` complex matrix viewed as n x n blocks of size k.

    Holds a private read-only copy of the entries, which lets realignment and
    partial determinants be cached on the instance.
    """

    n: int
    k: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise DimMismatch(f"block dims must be positive, got n={self.n}, k={self.k}")
        mat = np.array(as_complex_mat(self.mat))
        mat.flags.writeable = False
        if mat.shape[0] != self.n * self.k:
            raise DimMismatch(
                f"matrix of size {mat.shape[0]} cannot hold {self.n}x{self.n} blocks of size {self.k}"
            )
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.n * self.k

    def blocks(self) -> np.ndarray:
        """View of shape (n, n, k, k) with ``blocks()[i, j] == H_ij``."""
        return self.mat.reshape(self.n, self.k, self.n, self.k).transpose(0, 2, 1, 3)

    def block(self, i: int, j: int) -> np.ndarray:
        k = self.k
        return self.mat[i * k:(i + 1) * k, j * k:(j + 1) * k]

    def entry(self, i: int, j: int, l: int, m: int) -> complex:
        return complex(self.mat[i * self.k + l, j * self.k + m])

    def _same_shape(self, other: "BlockMat") -> None:
        if (self.n, self.k) != (other.n, other.k):
            raise DimMismatch(f"block shapes ({self.n},{self.k}) and ({other.n},{other.k}) differ")

    def __add__(self, other: "BlockMat") -> "BlockMat":
        # small per-instance memo: the catalog forms a+b, a+c, ... repeatedly
        memo = self.__dict__.setdefault("_sums", {})
        hit = memo.get(id(other))
        if hit is not None and hit[0] is other:
            return hit[1]
        self._same_shape(other)
        out = BlockMat(self.n, self.k, self.mat + other.mat)
        if len(memo) >= SUM_MEMO_SIZE:
            memo.pop(next(iter(memo)))
        memo[id(other)] = (other, out)
        return out

    def __sub__(self, other: "BlockMat") -> "BlockMat":
        self._same_shape(other)
        return BlockMat(self.n, self.k, self.mat - other.mat)

    @classmethod
    def identity(cls, n: int, k: int) -> "BlockMat":
        return cls(n, k, np.eye(n * k, dtype=np.complex128))

    @classmethod
    def zeros(cls, n: int, k: int) -> "BlockMat":
        return cls(n, k, np.zeros((n * k, n * k), dtype=np.complex128))


def realign(h: BlockMat) -> BlockMat:
    """The block/inner index swap H -> H~ in M_k(M_n).

    Block ``G_lm`` of the result is ``[h_{l,m}^{i,j}]_{i,j}``, i.e. entry
    ``(l*n + i, m*n + j)`` of H~ is entry ``(i*k + l, j*k + m)`` of H.  Pure
    data movement, so results are bit-exact.
    """
    cached = h.__dict__.get("_realigned")
    if cached is None:
        n, k = h.n, h.k
        moved = h.mat.reshape(n, k, n, k).transpose(1, 0, 3, 2).reshape(n * k, n * k)
        cached = BlockMat(k, n, moved)
        h.__dict__["_realigned"] = cached
    return cached


def full_det(h: BlockMat) -> complex:
    """det of the whole matrix, cached on the instance."""
    cached = h.__dict__.get("_det")
    if cached is None:
        cached = h.__dict__["_det"] = complex(np.linalg.det(h.mat))
    return cached


def diagonal_block_dets(h: BlockMat) -> np.ndarray:
    """[det H_11, ..., det H_nn], cached on the instance."""
    cached = h.__dict__.get("_diag_dets")
    if cached is None:
        blocks = h.blocks()
        cached = np.linalg.det(blocks[np.arange(h.n), np.arange(h.n)])
        cached.flags.writeable = False
        h.__dict__["_diag_dets"] = cached
    return cached


def partial_trace(h: BlockMat, side: int) -> np.ndarray:
    """side 1: sum_i H_ii (k x k).  side 2: [tr H_ij] (n x n)."""
    b = h.mat.reshape(h.n, h.k, h.n, h.k)
    if side == 1:
        return np.trace(b, axis1=0, axis2=2)
    if side == 2:
        return np.trace(b, axis1=1, axis2=3)
    raise ValueError(f"side must be 1 or 2, got {side!r}")


def partial_det(h: BlockMat, side: int) -> np.ndarray:
    """side 2: [det H_ij] (n x n).  side 1: [det G_lm] (k x k), read off H~."""
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side!r}")
    key = f"_partial_det{side}"
    cached = h.__dict__.get(key)
    if cached is None:
        src = h if side == 2 else realign(h)
        cached = np.linalg.det(src.blocks())
        cached.flags.writeable = False
        h.__dict__[key] = cached
    return cached


def commutation_matrix(n: int, k: int) -> np.ndarray:
    """Permutation P(n, k) with ``P.T @ h.mat @ P == realign(h).mat``.

    Consequently ``P.T @ kron(A, B) @ P == kron(B, A)`` for A n x n, B k x k.
    """
    if n < 1 or k < 1:
        raise DimMismatch(f"dims must be positive, got n={n}, k={k}")
    p = np.zeros((n * k, n * k), dtype=np.complex128)
    i, l = np.meshgrid(np.arange(n), np.arange(k), indexing="ij")
    p[(i * k + l).ravel(), (l * n + i).ravel()] = 1.0
    return p


@dataclass(frozen=True, eq=False)
class SelectionEmbedding:
    """The 0/1 isometry E with ``E* (⊗^r H) E == [⊗^r H_ij]``.

    Stored as the list of selected coordinates of the (nk)^r-dimensional
    tensor space, one per column of E.
    """

    n: int
    k: int
    r: int
    columns: np.ndarray = field(repr=False)

    @property
    def source_dim(self) -> int:
        return (self.n * self.k) ** self.r

    def compress(self, big: np.ndarray) -> np.ndarray:
        """E* big E, as a plain submatrix extraction."""
        big = np.asarray(big)
        if big.shape != (self.source_dim, self.source_dim):
            raise DimMismatch(f"expected a {self.source_dim}-dim matrix, got {big.shape}")
        return big[np.ix_(self.columns, self.columns)]

    def matrix(self) -> np.ndarray:
        e = np.zeros((self.source_dim, len(self.columns)), dtype=np.complex128)
        e[self.columns, np.arange(len(self.columns))] = 1.0
        return e


def selection_embedding(n: int, k: int, r: int, cap: int = DIM_CAP) -> SelectionEmbedding:
    if r < 1:
        raise ValueError(f"tensor order must be >= 1, got {r}")
    nk = n * k
    if nk ** r > cap:
        raise CapExceeded(f"(nk)^r = {nk ** r} exceeds cap {cap}")
    cols = []
    for i in range(n):
        for inner in product(range(k), repeat=r):
            # tensor coordinate (i*k + l_1, ..., i*k + l_r), row-major
            cols.append(np.ravel_multi_index([i * k + l for l in inner], (nk,) * r))
    return SelectionEmbedding(n, k, r, np.array(cols, dtype=np.intp))


def block_tensor_power(h: BlockMat, r: int) -> BlockMat:
    """[⊗^r H_ij]: n x n blocks, each the r-th tensor power of H_ij."""
    n, kr = h.n, h.k ** r
    out = np.empty((n * kr, n * kr), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i * kr:(i + 1) * kr, j * kr:(j + 1) * kr] = tensor_power(h.block(i, j), r)
    return BlockMat(n, kr, out)
