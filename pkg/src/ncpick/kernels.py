"""Completely positive kernel machinery.

The central object is the generalized Szego kernel attached to a row-type
defining polynomial Q0 (one coefficient row, s = 1): for points Z, W inside
the disk it is the unique solution T of the Stein identity

    T - Q0(Z) (T (x) I_R) Q0(W)* = P,

computed by a dense linear solve on the vectorized equation.  A truncated
geometric series with an a-priori tail bound is kept as an independent
cross-check of the solve.  On top of that sit Choi matrices, PSD
certificates, Kolmogorov factorizations, and the de Branges-Rovnyak kernel
used by the interpolation criteria.

Everything here is pure and operates on immutable inputs; callers may
parallelize across independent (Z, W, P) triples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    DimensionMismatchError,
    DomainError,
    MatrixTuple,
    NcMatrixPolynomial,
    _eval_poly,
    amp,
    operator_norm,
)

__all__ = [
    "PsdCertificate",
    "ChoiMatrix",
    "CpMap",
    "KolmogorovFactor",
    "NotPsdError",
    "psd_check",
    "choi_matrix",
    "cp_check_finite",
    "kolmogorov_factor",
    "phi_map",
    "szego_kernel_solve",
    "szego_kernel_series",
    "szego_map_matrix",
    "dbr_kernel",
    "dbr_map_matrix",
    "map_matrix_to_choi",
    "sandwich_matrix",
]

#: Dense 4-index storage for a cp map is kept only up to this level*block size.
CPMAP_TENSOR_LIMIT = 64

#: Relative eigenvalue threshold below which Kolmogorov ranks are truncated.
KOLMOGOROV_RANK_TOL = 1e-10

#: Default relative dead band for PSD verdicts.
PSD_REL_TOL = 1e-9


class NotPsdError(ValueError):
    """A matrix required to be positive semidefinite is not."""


# ---------------------------------------------------------------------------
# PSD certificates and Choi matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsdCertificate:
    """Verdict of a Hermitian eigenvalue test.

    ``psd`` holds iff ``min_eig >= -rel_tol * max(1, max_eig)``; verdicts
    with ``|min_eig|`` inside the dead band carry ``marginal=True``.
    """

    verdict: str
    min_eig: float
    max_eig: float
    rel_tol: float
    marginal: bool = False

    @property
    def is_psd(self) -> bool:
        return self.verdict == "psd"


def psd_check(M, rel_tol: float = PSD_REL_TOL, hermiticity_tol: float = 1e-8) -> PsdCertificate:
    """Certificate for M >= 0 via Hermitian eigendecomposition.

    The input is symmetrized first; a deviation from Hermiticity beyond
    ``hermiticity_tol`` relative to the norm is an error.
    """
    A = np.asarray(M, dtype=complex)
    if A.size == 0:
        return PsdCertificate("psd", 0.0, 0.0, rel_tol)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError("psd_check needs a square matrix")
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    herm_defect = float(np.linalg.norm(A - A.conj().T, 2))
    if herm_defect > hermiticity_tol * scale:
        raise ValueError(f"matrix is not Hermitian (defect {herm_defect:.3g})")
    H = 0.5 * (A + A.conj().T)
    eigs = np.linalg.eigvalsh(H)
    lo, hi = float(eigs[0]), float(eigs[-1])
    band = rel_tol * max(1.0, hi)
    verdict = "psd" if lo >= -band else "not_psd"
    marginal = verdict == "psd" and lo < band
    return PsdCertificate(verdict, lo, hi, rel_tol, marginal)


@dataclass(frozen=True)
class ChoiMatrix:
    """Block matrix [M(E_ij)]_{i,j=1..n} of a linear map on n x n inputs."""

    n: int
    block_dim: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        A = np.array(self.matrix, dtype=complex)
        expect = self.n * self.block_dim
        if A.shape != (expect, expect):
            raise DimensionMismatchError("Choi matrix shape does not match n * block_dim")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    def block(self, i: int, j: int) -> np.ndarray:
        b = self.block_dim
        return self.matrix[i * b : (i + 1) * b, j * b : (j + 1) * b]


class CpMap:
    """A linear map P -> M(P) from n x n matrices to block_dim x block_dim ones.

    Stores a dense 4-index tensor when ``n * block_dim`` is at most
    ``CPMAP_TENSOR_LIMIT``; larger maps keep only the application closure.
    """

    def __init__(self, n: int, block_dim: int,
                 apply: Callable[[np.ndarray], np.ndarray] | None = None,
                 tensor: np.ndarray | None = None):
        if apply is None and tensor is None:
            raise ValueError("need an apply closure or a tensor")
        self.n = int(n)
        self.block_dim = int(block_dim)
        self._apply = apply
        if tensor is not None:
            tensor = np.asarray(tensor, dtype=complex)
            if tensor.shape != (block_dim, block_dim, n, n):
                raise DimensionMismatchError("tensor must have shape (b, b, n, n)")
        elif n * block_dim <= CPMAP_TENSOR_LIMIT:
            tensor = np.empty((block_dim, block_dim, n, n), dtype=complex)
            for i in range(n):
                for j in range(n):
                    unit = np.zeros((n, n), dtype=complex)
                    unit[i, j] = 1.0
                    tensor[:, :, i, j] = apply(unit)
        self._tensor = tensor

    def __call__(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=complex)
        if P.shape != (self.n, self.n):
            raise DimensionMismatchError("input must be n x n")
        if self._tensor is not None:
            return np.einsum("pqij,ij->pq", self._tensor, P)
        return np.asarray(self._apply(P), dtype=complex)

    def spot_check_linearity(self, rng: np.random.Generator, tol: float = 1e-8) -> bool:
        # probe the raw closure when available: the cached tensor is linear
        # by construction and would mask a nonlinear closure
        action = self._apply if self._apply is not None else self.__call__
        shape = (self.n, self.n)
        P1 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        P2 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        a, b = complex(rng.standard_normal()), complex(rng.standard_normal())
        lhs = np.asarray(action(a * P1 + b * P2))
        rhs = a * np.asarray(action(P1)) + b * np.asarray(action(P2))
        scale = max(1.0, float(np.linalg.norm(rhs)))
        return bool(np.linalg.norm(lhs - rhs) <= tol * scale)


def choi_matrix(M: CpMap, strict: bool = False, seed: int = 0) -> ChoiMatrix:
    """Assemble the Choi matrix [M(E_ij)] of a linear map.

    With ``strict`` a randomized linearity spot check runs first.
    """
    if strict and not M.spot_check_linearity(np.random.default_rng(seed)):
        raise ValueError("map failed the linearity spot check")
    n, b = M.n, M.block_dim
    out = np.zeros((n * b, n * b), dtype=complex)
    for i in range(n):
        for j in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[i, j] = 1.0
            out[i * b : (i + 1) * b, j * b : (j + 1) * b] = M(unit)
    return ChoiMatrix(n, b, out)


@dataclass(frozen=True)
class KolmogorovFactor:
    """Blocks B_1..B_n with Choi block (i, j) = B_i B_j^*; rank = state dim."""

    rank: int
    blocks: tuple[np.ndarray, ...]

    @property
    def stacked(self) -> np.ndarray:
        """Row concatenation H = [B_1 ... B_n]: C^n (x) X -> block space."""
        if not self.blocks:
            return np.zeros((0, 0), dtype=complex)
        return np.hstack(self.blocks)


def kolmogorov_factor(C: ChoiMatrix, rank_tol: float = KOLMOGOROV_RANK_TOL) -> KolmogorovFactor:
    """Factor a PSD Choi matrix as [B_i B_j^*] by truncated eigendecomposition.

    Eigenvalues below ``rank_tol`` times the largest are dropped; the
    retained rank is the state-space dimension of the induced Kolmogorov
    decomposition M(P) = H (P (x) I_X) H^*.
    """
    cert = psd_check(C.matrix, rel_tol=max(PSD_REL_TOL, rank_tol))
    if not cert.is_psd:
        raise NotPsdError(f"Choi matrix is not PSD (min eig {cert.min_eig:.3g})")
    if C.matrix.size == 0:
        return KolmogorovFactor(0, tuple(np.zeros((C.block_dim, 0), complex)
                                         for _ in range(C.n)))
    H = 0.5 * (C.matrix + C.matrix.conj().T)
    vals, vecs = np.linalg.eigh(H)
    top = float(vals[-1])
    if top <= 0.0:
        keep = np.zeros(vals.shape, dtype=bool)
    else:
        keep = vals > rank_tol * top
    F = vecs[:, keep] * np.sqrt(np.clip(vals[keep], 0.0, None))
    rank = F.shape[1]
    b = C.block_dim
    blocks = tuple(F[i * b : (i + 1) * b, :] for i in range(C.n))
    return KolmogorovFactor(rank, blocks)


# ---------------------------------------------------------------------------
# The generalized Szego kernel
# ---------------------------------------------------------------------------


def _check_row_poly(Q0: NcMatrixPolynomial) -> None:
    # the exact-solve route is specified only for one-row defining polynomials
    if Q0.s != 1:
        raise ValueError("the Szego kernel requires a one-row polynomial (s = 1)")


def phi_map(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple, P) -> np.ndarray:
    """One Stein step Phi(P) = Q0(Z) (P (x) I_R) Q0(W)^*."""
    _check_row_poly(Q0)
    P = np.asarray(P, dtype=complex)
    if P.shape != (Z.n, W.n):
        raise DimensionMismatchError("P must be level(Z) x level(W)")
    QZ = _eval_poly(Q0, Z)
    QW = _eval_poly(Q0, W)
    return QZ @ amp(P, Q0.r) @ QW.conj().T


def _phi_matrix(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple) -> np.ndarray:
    """Matrix of Phi on row-major vectorized n x m inputs."""
    n, m = Z.n, W.n
    QZ = _eval_poly(Q0, Z)
    QW = _eval_poly(Q0, W)
    M = np.zeros((n * m, n * m), dtype=complex)
    for rho in range(Q0.r):
        G = QZ[:, rho * n : (rho + 1) * n]
        H = QW[:, rho * m : (rho + 1) * m]
        M += np.kron(G, H.conj())
    return M


def _require_in_disk(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple) -> tuple[float, float]:
    rhoZ = operator_norm(_eval_poly(Q0, Z))
    rhoW = operator_norm(_eval_poly(Q0, W))
    if rhoZ >= 1.0 or rhoW >= 1.0:
        raise DomainError(f"points must lie in the disk (norms {rhoZ:.3g}, {rhoW:.3g})")
    return rhoZ, rhoW


def szego_map_matrix(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple) -> np.ndarray:
    """Matrix of P -> k_{Q0}(Z, W)(P) on row-major vectorized inputs."""
    _check_row_poly(Q0)
    _require_in_disk(Q0, Z, W)
    nm = Z.n * W.n
    return np.linalg.solve(np.eye(nm) - _phi_matrix(Q0, Z, W), np.eye(nm))


def szego_kernel_solve(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple, P) -> np.ndarray:
    """k_{Q0}(Z, W)(P): exact solution of T - Phi(T) = P by dense LU."""
    _check_row_poly(Q0)
    P = np.asarray(P, dtype=complex)
    if P.shape != (Z.n, W.n):
        raise DimensionMismatchError("P must be level(Z) x level(W)")
    _require_in_disk(Q0, Z, W)
    nm = Z.n * W.n
    vec = np.linalg.solve(np.eye(nm) - _phi_matrix(Q0, Z, W), P.reshape(-1))
    return vec.reshape(Z.n, W.n)


def szego_kernel_series(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple, P,
                        tol: float = 1e-12, max_terms: int = 10_000) -> tuple[np.ndarray, int]:
    """Truncated geometric series for the kernel, with its truncation length.

    Iterates T_{k+1} = Phi(T_k) from T_0 = P and stops once the a-priori
    tail bound (rho_Z rho_W)^{L+1} / (1 - rho_Z rho_W) * ||P|| drops below
    ``tol``.
    """
    _check_row_poly(Q0)
    P = np.asarray(P, dtype=complex)
    if P.shape != (Z.n, W.n):
        raise DimensionMismatchError("P must be level(Z) x level(W)")
    QZ = _eval_poly(Q0, Z)
    QW = _eval_poly(Q0, W)
    rho = operator_norm(QZ) * operator_norm(QW)
    if rho >= 1.0:
        raise DomainError("no convergent tail bound outside the disk")
    normP = float(np.linalg.norm(P, 2))
    total = np.array(P, dtype=complex)
    term = np.array(P, dtype=complex)
    L = 0
    while rho ** (L + 1) / (1.0 - rho) * normP > tol:
        term = QZ @ amp(term, Q0.r) @ QW.conj().T
        total += term
        L += 1
        if L > max_terms:
            raise RuntimeError("series failed to reach the tolerance")
    return total, L


def szego_tail_bound(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple, P,
                     L: int) -> float:
    """A-priori bound on the series remainder after L + 1 terms."""
    rho = operator_norm(_eval_poly(Q0, Z)) * operator_norm(_eval_poly(Q0, W))
    normP = float(np.linalg.norm(np.asarray(P), 2))
    return rho ** (L + 1) / (1.0 - rho) * normP


# ---------------------------------------------------------------------------
# Choi tests on finitely generated sets
# ---------------------------------------------------------------------------


def cp_check_finite(kernel: Callable[[MatrixTuple, MatrixTuple, np.ndarray], np.ndarray],
                    Omega_F: Sequence[MatrixTuple], block_dim: int,
                    rel_tol: float = PSD_REL_TOL) -> tuple[PsdCertificate, ChoiMatrix]:
    """Certify complete positivity of a kernel on a finite generating set.

    ``kernel(Z, W, P)`` must return the value at pairs from ``Omega_F``,
    a ``block_dim * n(Z) x block_dim * n(W)`` matrix for P of shape
    ``n(Z) x n(W)``.  The Choi matrix of the kernel at the direct-sum point
    is assembled blockwise from pairwise evaluations on matrix units (the
    direct-sum extension of the kernel), so one PSD test certifies complete
    positivity on the whole generated set.
    """
    if not Omega_F:
        raise ValueError("need at least one point")
    d0 = Omega_F[0].d
    if any(Z.d != d0 for Z in Omega_F):
        raise DimensionMismatchError("points have different variable counts")
    levels = [Z.n for Z in Omega_F]
    N = sum(levels)
    offs = np.concatenate(([0], np.cumsum(levels))).astype(int)
    b = int(block_dim)
    # choi4[I, row, J, col] = M(E_IJ)[row, col] for the map M at the sum point
    choi4 = np.zeros((N, b * N, N, b * N), dtype=complex)
    for ai, Za in enumerate(Omega_F):
        for bi, Zb in enumerate(Omega_F):
            for i in range(Za.n):
                for j in range(Zb.n):
                    unit = np.zeros((Za.n, Zb.n), dtype=complex)
                    unit[i, j] = 1.0
                    val = np.asarray(kernel(Za, Zb, unit), dtype=complex)
                    if val.shape != (b * Za.n, b * Zb.n):
                        raise DimensionMismatchError("kernel value has unexpected shape")
                    big = np.zeros((b, N, b, N), dtype=complex)
                    big[:, offs[ai] : offs[ai] + Za.n, :, offs[bi] : offs[bi] + Zb.n] = (
                        val.reshape(b, Za.n, b, Zb.n)
                    )
                    choi4[offs[ai] + i, :, offs[bi] + j, :] = big.reshape(b * N, b * N)
    C = ChoiMatrix(N, b * N, choi4.reshape(N * b * N, N * b * N))
    return psd_check(C.matrix, rel_tol=rel_tol), C


def sandwich_matrix(A0: np.ndarray, n: int) -> np.ndarray:
    """Matrix of T -> A0 (T (x) I_c) A0^* on row-major vectorized n x n inputs.

    A0 is a coefficient-major value of shape (e n) x (c n); the result maps
    vec(T) to vec of an (e n) x (e n) matrix.
    """
    A0 = np.asarray(A0, dtype=complex)
    if A0.shape[1] % n:
        raise DimensionMismatchError("value columns are not a multiple of the level")
    c = A0.shape[1] // n
    out = np.zeros((A0.shape[0] ** 2, n * n), dtype=complex)
    for q in range(c):
        blockcol = A0[:, q * n : (q + 1) * n]
        out += np.kron(blockcol, blockcol.conj())
    return out


def dbr_kernel(Q0: NcMatrixPolynomial, Z: MatrixTuple, W: MatrixTuple, P,
               aZ, aW, bZ, bW) -> np.ndarray:
    """Generalized de Branges-Rovnyak kernel value.

    Returns ``a(Z) (k(Z,W)(P) (x) I_Y) a(W)^* - b(Z) (k(Z,W)(P) (x) I_U) b(W)^*``
    with the Szego kernel computed by exact solve.  ``aZ, aW`` are values of
    the left function at Z and W (shape (e n) x (y n), coefficient-major),
    ``bZ, bW`` likewise with column coefficient dimension u.
    """
    aZ = np.asarray(aZ, dtype=complex)
    aW = np.asarray(aW, dtype=complex)
    bZ = np.asarray(bZ, dtype=complex)
    bW = np.asarray(bW, dtype=complex)
    n, m = Z.n, W.n
    if aZ.shape[1] % n or aW.shape[1] % m or bZ.shape[1] % n or bW.shape[1] % m:
        raise DimensionMismatchError("tangential values are not over the point levels")
    y = aZ.shape[1] // n
    u = bZ.shape[1] // n
    if aW.shape[1] // m != y or bW.shape[1] // m != u:
        raise DimensionMismatchError("left/right coefficient dimensions differ")
    if aZ.shape[0] != bZ.shape[0] or aW.shape[0] != bW.shape[0]:
        raise DimensionMismatchError("a and b must share the E row space")
    k = szego_kernel_solve(Q0, Z, W, P)
    return aZ @ amp(k, y) @ aW.conj().T - bZ @ amp(k, u) @ bW.conj().T


def dbr_map_matrix(Q0: NcMatrixPolynomial, Z: MatrixTuple, A0, B0) -> np.ndarray:
    """Matrix of P -> dbr_kernel(Q0, Z, Z, P, A0, A0, B0, B0) on vec inputs."""
    A0 = np.asarray(A0, dtype=complex)
    B0 = np.asarray(B0, dtype=complex)
    if A0.shape[0] != B0.shape[0]:
        raise DimensionMismatchError("A0 and B0 must share the E row space")
    K = szego_map_matrix(Q0, Z, Z)
    return (sandwich_matrix(A0, Z.n) - sandwich_matrix(B0, Z.n)) @ K


def map_matrix_to_choi(Mmat: np.ndarray, n: int, out_dim: int) -> ChoiMatrix:
    """Choi matrix of a map given by its matrix on row-major vec inputs.

    ``Mmat`` maps vec of n x n inputs to vec of out_dim x out_dim outputs;
    column i * n + j holds vec(M(E_ij)).
    """
    Mmat = np.asarray(Mmat, dtype=complex)
    if Mmat.shape != (out_dim * out_dim, n * n):
        raise DimensionMismatchError("map matrix has unexpected shape")
    tens = Mmat.reshape(out_dim, out_dim, n, n)
    choi = tens.transpose(2, 0, 3, 1).reshape(n * out_dim, n * out_dim)
    return ChoiMatrix(n, out_dim, choi)
