import numpy as np
import pytest

from partialmat.block import BlockMat, realign
from partialmat.dense import compound, det, kron
from partialmat.errors import DimTooLarge
from partialmat.oracle import compound_minors, det_laplace, realign_bruteforce

from conftest import random_complex


def test_det_laplace_small():
    assert det_laplace(np.eye(3)) == 1
    assert det_laplace([[0, 1], [1, 0]]) == -1
    assert det_laplace([[2, 1], [1, 2]]) == 3
    assert det_laplace([[5j]]) == 5j


def test_det_laplace_guard():
    with pytest.raises(DimTooLarge):
        det_laplace(np.eye(9))


@pytest.mark.parametrize("dim", [1, 2, 3, 4, 5, 6])
def test_det_agrees_with_laplace(rng, dim):
    for _ in range(30):
        a = random_complex(rng, dim)
        ref = det_laplace(a)
        assert abs(det(a) - ref) <= 1e-10 * abs(ref)


def test_compound_minors_basics(rng):
    assert np.array_equal(compound_minors(np.eye(4), 2), np.eye(6))
    a = random_complex(rng, 4)
    assert compound_minors(a, 4)[0, 0] == det_laplace(a)
    with pytest.raises(DimTooLarge):
        compound_minors(np.eye(10), 5)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_compound_agrees_with_minors(rng, r):
    for _ in range(20):
        a = random_complex(rng, 4)
        ref = compound_minors(a, r)
        assert np.abs(compound(a, r) - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_realign_bruteforce_cases(rng):
    assert np.array_equal(realign_bruteforce(BlockMat.identity(3, 2)), np.eye(6))
    h = BlockMat(3, 2, random_complex(rng, 6))
    assert np.array_equal(realign_bruteforce(h), realign(h).mat)
    a, b = random_complex(rng, 3), random_complex(rng, 2)
    assert np.array_equal(realign_bruteforce(BlockMat(3, 2, kron(a, b))), kron(b, a))
