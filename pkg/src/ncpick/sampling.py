"""Seeded random generators for points, polynomials, and test data.

All draws go through an explicit ``numpy.random.Generator`` so that every
caller (library verification loops, the CLI, tests) is deterministic under
a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .core import (
    MatrixTuple,
    NcMatrixPolynomial,
    Word,
    _eval_poly,
    operator_norm,
)

__all__ = [
    "complex_gaussian",
    "random_tuple",
    "scale_into_domain",
    "sample_in_domain",
    "random_row_poly",
]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_tuple(rng: np.random.Generator, d: int, n: int, scale: float = 1.0) -> MatrixTuple:
    return MatrixTuple(tuple(scale * complex_gaussian(rng, (n, n)) for _ in range(d)))


def scale_into_domain(Q0: NcMatrixPolynomial, Z: MatrixTuple, target: float = 0.8,
                      tol: float = 1e-12) -> MatrixTuple:
    """Rescale a tuple so that ||Q0(t Z)|| equals ``target``.

    Requires ||Q0(0)|| < target (the constant term must not already fill
    the disk) and some nonconstant term to be active at Z.
    """
    if not 0 < target < 1:
        raise ValueError("target norm must lie in (0, 1)")
    base = operator_norm(_eval_poly(Q0, MatrixTuple.zeros(Z.d, Z.n)))
    if base >= target:
        raise ValueError("constant term of Q0 already exceeds the target norm")

    def norm_at(t: float) -> float:
        return operator_norm(_eval_poly(Q0, Z.scaled(t)))

    hi = 1.0
    for _ in range(200):
        if norm_at(hi) >= target:
            break
        hi *= 2.0
    else:
        raise ValueError("Q0 appears constant along this direction")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) < target:
            lo = mid
        else:
            hi = mid
    return Z.scaled(lo)


def sample_in_domain(Q0: NcMatrixPolynomial, n: int, rng: np.random.Generator,
                     target: float = 0.8) -> MatrixTuple:
    """A random level-n point with ||Q0(Z)|| just below ``target``."""
    return scale_into_domain(Q0, random_tuple(rng, Q0.d, n), target=target)


def random_row_poly(rng: np.random.Generator, d: int, r: int, degree: int = 1,
                    terms: int | None = None, include_constant: bool = False,
                    scale: float = 1.0) -> NcMatrixPolynomial:
    """A random one-row polynomial over d variables with r coefficient columns."""
    letters = list(range(1, d + 1))
    words = [()] if include_constant else []
    if degree >= 1:
        words += [(k,) for k in letters]
    pool: list[tuple[int, ...]] = list(words)
    cur = [(k,) for k in letters]
    for _ in range(degree - 1):
        cur = [w + (k,) for w in cur for k in letters]
        pool += cur
    if terms is not None and terms < len(pool):
        idx = rng.choice(len(pool), size=terms, replace=False)
        pool = [pool[i] for i in sorted(idx)]
    tmap = {
        Word(w, d): scale * complex_gaussian(rng, (1, r)) for w in pool
    }
    return NcMatrixPolynomial(d, 1, r, tmap)
