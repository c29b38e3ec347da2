import numpy as np
import pytest

from ncpick.core import MatrixTuple


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def mt(*arrays) -> MatrixTuple:
    """Matrix tuple from array-likes."""
    return MatrixTuple(tuple(np.asarray(a, dtype=complex) for a in arrays))


def scalar_point(*values) -> MatrixTuple:
    """Level-1 tuple from complex scalars."""
    return MatrixTuple(tuple(np.array([[v]], dtype=complex) for v in values))


def jordan_cell(lam: complex, n: int) -> np.ndarray:
    J = np.diag(np.full(n, complex(lam)))
    J += np.diag(np.ones(n - 1), 1) if n > 1 else 0.0
    return J
