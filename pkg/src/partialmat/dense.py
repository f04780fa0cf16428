"""Dense complex matrix arithmetic.

Matrices are plain square ``numpy`` arrays of dtype ``complex128``.  Nothing
here keeps state, so every function is safe to call from several threads.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.linalg import lapack

from .errors import DimMismatch, NoConvergence, NotHermitian
from .tolerance import DEFAULT_TOL, Tolerance

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_OFF = 1e-14
# above this size only the smallest eigenvalue is computed
SMALL_EIG_DIM = 12


def as_complex_mat(a) -> np.ndarray:
    """Coerce ``a`` to a square complex128 array; raise on anything else."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimMismatch(f"expected a non-empty square matrix, got shape {arr.shape}")
    return arr


def hermitian_deviation(a: np.ndarray) -> float:
    """max |a_ij - conj(a_ji)|."""
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_complex_mat(a)
    return hermitian_deviation(a) <= tol.bound_for(a)


def require_hermitian(a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    a = as_complex_mat(a)
    dev = hermitian_deviation(a)
    if dev > tol.bound_for(a):
        raise NotHermitian(f"Hermitian deviation {dev:.3e} exceeds tolerance")
    return a


def hermitianize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) of the result is ``a[i, j] * b``."""
    return _kron(as_complex_mat(a), as_complex_mat(b))


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of the trailing two axes, broadcast over leading ones."""
    # complex products spelled out in real arithmetic: numpy's complex multiply
    # may fuse operations, which makes a*b and b*a differ in the last bit
    m, n = a.shape[-2:]
    p, q = b.shape[-2:]
    ar, ai = a.real[..., :, None, :, None], a.imag[..., :, None, :, None]
    br, bi = b.real[..., None, :, None, :], b.imag[..., None, :, None, :]
    re = ar * br
    re -= ai * bi
    im = ar * bi
    im += ai * br
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out.reshape(out.shape[:-4] + (m * p, n * q))


def tensor_power(a, r: int) -> np.ndarray:
    """r-fold Kronecker power, built left to right: ((a ⊗ a) ⊗ a) ..."""
    if r < 1:
        raise ValueError(f"tensor power order must be >= 1, got {r}")
    a = as_complex_mat(a)
    out = a
    for _ in range(r - 1):
        out = _kron(out, a)
    return out


def subsets(dim: int, r: int) -> list[tuple[int, ...]]:
    """All r-subsets of range(dim) in lexicographic order (0-based)."""
    return list(combinations(range(dim), r))


def compound(a, r: int) -> np.ndarray:
    """r-th multiplicative compound (Grassmann power) of ``a``.

    Rows and columns are indexed by the lexicographically ordered r-subsets;
    entry (S, T) is the minor det(a[S, T]).
    """
    a = as_complex_mat(a)
    dim = a.shape[0]
    if not 1 <= r <= dim:
        raise ValueError(f"compound order must lie in [1, {dim}], got {r}")
    idx = np.array(subsets(dim, r), dtype=np.intp)
    # stack every r x r submatrix a[S, T] and take all minors in one batch
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    return np.linalg.det(a[rows, cols])


def det(a) -> complex:
    """Determinant via LU factorisation with partial pivoting (LAPACK getrf)."""
    return complex(np.linalg.det(as_complex_mat(a)))


def det_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> float:
    """Real determinant of a Hermitian matrix.

    The imaginary part left over by the complex LU must be within tolerance.
    """
    d = det(a)
    if abs(d.imag) > tol.bound_for(d.real):
        raise NotHermitian(f"determinant has imaginary part {d.imag:.3e}")
    return d.real


def _jacobi_sweep(w: np.ndarray) -> None:
    dim = w.shape[0]
    for p in range(dim - 1):
        for q in range(p + 1, dim):
            b = w[p, q]
            mag = abs(b)
            if mag == 0.0:
                continue
            phase = b / mag
            theta = (w[q, q].real - w[p, p].real) / (2.0 * mag)
            t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
            if theta < 0.0:
                t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # J = diag-phase then real rotation; w <- J^H w J zeroes w[p, q]
            j = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
            pq = [p, q]
            w[:, pq] = w[:, pq] @ j
            w[pq, :] = j.conj().T @ w[pq, :]
            w[p, q] = w[q, p] = 0.0
            w[p, p] = w[p, p].real
            w[q, q] = w[q, q].real


def eig_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi sweeps.

    Sweeps continue until the off-diagonal Frobenius norm falls below
    ``1e-14 * ||a||_F``; more than 100 sweeps raises ``NoConvergence``.
    """
    a = require_hermitian(a, tol)
    w = hermitianize(a).copy()
    target = JACOBI_REL_OFF * np.linalg.norm(w)
    for _ in range(JACOBI_MAX_SWEEPS + 1):
        off = np.linalg.norm(w - np.diag(np.diag(w)))
        if off <= target:
            return np.sort(np.diag(w).real)
        _jacobi_sweep(w)
    raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def min_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """λ_min of the Hermitian part of each matrix in a (T, d, d) stack (LAPACK)."""
    h = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
    if h.shape[-1] <= SMALL_EIG_DIM:
        return np.linalg.eigvalsh(h)[..., 0]
    out = np.empty(h.shape[0])
    for t, mat in enumerate(h):
        w, _, _, _, info = lapack.zheevr(mat, compute_v=0, range="I", il=1, iu=1)
        if info != 0:
            raise NoConvergence(f"LAPACK Hermitian eigensolver failed (info={info})")
        out[t] = w[0]
    return out


def min_eigenvalue(a: np.ndarray) -> float:
    """λ_min of the Hermitian part of ``a`` (LAPACK, used on hot paths)."""
    return float(min_eigenvalues(as_complex_mat(a)[None])[0])


def loewner_margin(a, b, tol: Tolerance = DEFAULT_TOL) -> float:
    """λ_min(a - b); ``a >= b`` holds numerically when this is >= -tol."""
    a = as_complex_mat(a)
    b = as_complex_mat(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    require_hermitian(a, tol)
    require_hermitian(b, tol)
    return min_eigenvalue(a - b)


__all__ = [
    "as_complex_mat",
    "compound",
    "det",
    "det_hermitian",
    "eig_hermitian",
    "hermitian_deviation",
    "hermitianize",
    "is_hermitian",
    "kron",
    "loewner_margin",
    "min_eigenvalue",
    "require_hermitian",
    "subsets",
    "tensor_power",
]
