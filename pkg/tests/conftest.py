import numpy as np
import pytest

from partialmat.block import BlockMat

# acceptance criteria outcomes, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_complex(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_hermitian(rng, dim):
    g = random_complex(rng, dim)
    return (g + g.conj().T) / 2


def random_psd(rng, dim, rank=None):
    g = random_complex(rng, dim, rank or dim)
    h = g @ g.conj().T / dim
    return (h + h.conj().T) / 2


def random_block(rng, n, k, psd=True):
    mat = random_psd(rng, n * k) if psd else random_complex(rng, n * k)
    return BlockMat(n, k, mat)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def m2():
    return np.array([[2, 1], [1, 2]], dtype=complex)


@pytest.fixture
def kron_m_i2(m2):
    """H = M ⊗ I_2 with M = [[2,1],[1,2]]: the hand-evaluated running example."""
    return BlockMat(2, 2, np.kron(m2, np.eye(2)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
