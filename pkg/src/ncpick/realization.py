"""Colligations, transfer functions, and lurking-isometry synthesis.

A colligation is a block operator U = [A B; C D] from X (+) U into
(R (x) X) (+) Y.  Its transfer function against a one-row defining
polynomial Q0,

    S(Z) = D^(n) + C^(n) (I - (Q0(Z) (x) I_X) A^(n))^{-1} (Q0(Z) (x) I_X) B^(n),

is a noncommutative function on the disk of Q0, contractive whenever U is.
``lurking_isometry_synthesize`` runs the construction in the opposite
direction: from feasible single-point tangential data it factors the
de Branges-Rovnyak Choi matrix and reads a contractive colligation off the
Gram-equal vector families.

Amplified operators use these layouts (all coefficient-major elsewhere):
state space at level n is C^n (x) X (point index outer), the tensor slot
is R (x) C^n (x) X (tensor index outermost), inputs/outputs are
U (x) C^n and Y (x) C^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .core import (
    DimensionMismatchError,
    DomainError,
    MatrixTuple,
    NcMatrixPolynomial,
    _eval_poly,
    in_domain,
    operator_norm,
)
from .kernels import (
    ChoiMatrix,
    NotPsdError,
    PsdCertificate,
    dbr_map_matrix,
    kolmogorov_factor,
    map_matrix_to_choi,
    psd_check,
)

__all__ = [
    "Colligation",
    "RealizedFunction",
    "AmplifiedColligation",
    "SynthesisDiagnostics",
    "SynthesisConsistencyError",
    "amplify",
    "transfer_eval",
    "colligation_contraction_check",
    "random_contractive_colligation",
    "lurking_isometry_synthesize",
]

#: Pivot threshold for the rank-revealing QR inside the synthesis.
QR_RANK_TOL = 1e-10


class SynthesisConsistencyError(RuntimeError):
    """The Gram families disagreed beyond tolerance; indicates a layout bug."""


@dataclass(frozen=True)
class Colligation:
    """Block operator U = [A B; C D] : X (+) U -> (R (x) X) (+) Y.

    Shapes: A is (r dimX) x dimX, B is (r dimX) x dimU, C is dimY x dimX,
    D is dimY x dimU.  The tensor slot R (x) X is ordered with the tensor
    index outermost.
    """

    dimX: int
    dimU: int
    dimY: int
    r: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        shapes = {
            "A": (self.r * self.dimX, self.dimX),
            "B": (self.r * self.dimX, self.dimU),
            "C": (self.dimY, self.dimX),
            "D": (self.dimY, self.dimU),
        }
        for name, want in shapes.items():
            arr = np.array(getattr(self, name), dtype=complex)
            arr = arr.reshape(want) if arr.size == want[0] * want[1] else arr
            if arr.shape != want:
                raise DimensionMismatchError(f"block {name} must have shape {want}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if "contractive" in self.flags and operator_norm(self.as_matrix()) > 1 + 1e-10:
            raise ValueError("colligation flagged contractive exceeds norm 1")
        if "unitary" in self.flags:
            U = self.as_matrix()
            if U.shape[0] != U.shape[1] or operator_norm(U.conj().T @ U - np.eye(U.shape[1])) > 1e-10:
                raise ValueError("colligation flagged unitary is not unitary")

    def as_matrix(self) -> np.ndarray:
        top = np.hstack([self.A, self.B])
        bot = np.hstack([self.C, self.D])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class RealizedFunction:
    """A colligation together with the defining polynomial of its disk."""

    colligation: Colligation
    Q0: NcMatrixPolynomial

    def __post_init__(self) -> None:
        if self.Q0.s != 1:
            raise ValueError("realizations are taken against one-row polynomials")
        if self.Q0.r != self.colligation.r:
            raise DimensionMismatchError("tensor dimension of Q0 and colligation differ")

    def __call__(self, Z: MatrixTuple) -> np.ndarray:
        return transfer_eval(self, Z)


class AmplifiedColligation(NamedTuple):
    An: np.ndarray
    Bn: np.ndarray
    Cn: np.ndarray
    Dn: np.ndarray


def amplify(col: Colligation, n: int) -> AmplifiedColligation:
    """Level-n amplification I_n (x) blocks, reindexed for transfer_eval.

    ``An`` maps C^n (x) X into R (x) C^n (x) X, ``Bn`` maps U (x) C^n into
    R (x) C^n (x) X, ``Cn`` maps C^n (x) X into Y (x) C^n, and
    ``Dn = D (x) I_n``.
    """
    if n < 1:
        raise ValueError("level must be at least 1")
    X, u, y, r = col.dimX, col.dimU, col.dimY, col.r
    eye = np.eye(n)
    a = col.A.reshape(r, X, X)
    b = col.B.reshape(r, X, u)
    An = np.einsum("ij,rvx->rivjx", eye, a).reshape(r * n * X, n * X)
    Bn = np.einsum("ij,rvu->rivuj", eye, b).reshape(r * n * X, u * n)
    Cn = np.einsum("ij,yx->yijx", eye, col.C).reshape(y * n, n * X)
    Dn = np.kron(col.D, eye)
    return AmplifiedColligation(An, Bn, Cn, Dn)


def transfer_eval(f: RealizedFunction, Z: MatrixTuple) -> np.ndarray:
    """Evaluate the transfer function at an in-domain point.

    Returns the (dimY n) x (dimU n) value in the coefficient-major layout.
    """
    col, Q0 = f.colligation, f.Q0
    if not in_domain(Q0, Z):
        raise DomainError("point lies outside the disk of Q0")
    n, X = Z.n, col.dimX
    An, Bn, Cn, Dn = amplify(col, n)
    if X == 0:
        return Dn
    L = np.kron(_eval_poly(Q0, Z), np.eye(X))
    G = L @ An
    K = L @ Bn
    body = np.linalg.solve(np.eye(n * X) - G, K)
    return Dn + Cn @ body


def colligation_contraction_check(col: Colligation, tol: float = 1e-9) -> PsdCertificate:
    """PSD certificate for I - U^* U."""
    U = col.as_matrix()
    return psd_check(np.eye(U.shape[1]) - U.conj().T @ U, rel_tol=tol)


def random_contractive_colligation(dimX: int, dimU: int, dimY: int, r: int,
                                   seed: int = 0, unitary: bool = False) -> Colligation:
    """Deterministic random colligation, contractive or unitary.

    With ``unitary`` the shapes must satisfy r dimX + dimY = dimX + dimU;
    a unitary is drawn via QR of a complex Gaussian matrix.  Otherwise a
    Gaussian block is rescaled to norm 1 - 1e-6.
    """
    if min(dimX, dimU, dimY, r) < 0 or min(dimU, dimY, r) == 0:
        raise ValueError("dimensions must be positive (dimX may be zero)")
    rng = np.random.default_rng(seed)
    rows = r * dimX + dimY
    cols = dimX + dimU
    if unitary:
        if rows != cols:
            raise ValueError("unitary completion needs r dimX + dimY = dimX + dimU")
        G = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        Q, R = np.linalg.qr(G)
        U = Q * (np.diag(R) / np.abs(np.diag(R)))
        flags = ("unitary", "contractive")
    else:
        G = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        U = G * ((1.0 - 1e-6) / max(operator_norm(G), 1e-300))
        flags = ("contractive",)
    rX = r * dimX
    return Colligation(dimX, dimU, dimY, r,
                       U[:rX, :dimX], U[:rX, dimX:], U[rX:, :dimX], U[rX:, dimX:],
                       flags=flags)


@dataclass(frozen=True)
class SynthesisDiagnostics:
    choi_min_eig: float
    state_dim: int
    family_size: int
    gram_residual: float
    colligation_norm: float
    interp_residual: float = field(default=float("nan"))


def _dbr_choi(Q0: NcMatrixPolynomial, Z0: MatrixTuple, a0, b0) -> ChoiMatrix:
    n = Z0.n
    e = np.asarray(a0).shape[0] // n
    M = dbr_map_matrix(Q0, Z0, a0, b0)
    return map_matrix_to_choi(M, n, e * n)


def _unitary_completion(Q1: np.ndarray, images: np.ndarray, X: int, u: int, y: int,
                        r: int, rank: int) -> tuple[int, np.ndarray]:
    """Extend the partial isometry to a unitary, padding the state space.

    Solves r X' + y = X' + u for the padded state dimension X' and pairs
    orthonormal bases of the two defect spaces.  Raises ``ValueError``
    when no nonnegative pad exists for the block shapes.
    """
    if r == 1:
        if u != y:
            raise ValueError("unitary completion with r = 1 needs dimU = dimY")
        pad = 0
    else:
        gap = (X + u) - (r * X + y)
        if gap < 0 or gap % (r - 1):
            raise ValueError("no state padding matches the defect dimensions")
        pad = gap // (r - 1)
    Xp = X + pad
    dom, cod = r * Xp + y, Xp + u
    # embed tensor-slot coordinates (rho, x) and state coordinates into the
    # padded spaces; new coordinates stay zero on the families
    E_dom = np.zeros((dom, r * X + y), dtype=complex)
    for rho in range(r):
        E_dom[rho * Xp : rho * Xp + X, rho * X : (rho + 1) * X] = np.eye(X)
    E_dom[r * Xp :, r * X :] = np.eye(y)
    E_cod = np.zeros((cod, X + u), dtype=complex)
    E_cod[:X, :X] = np.eye(X)
    E_cod[Xp:, X:] = np.eye(u)

    Q1e = E_dom @ Q1
    # polish the images to exact orthonormality before pairing defects
    if rank > 0:
        Qi, Ri = np.linalg.qr(E_cod @ images)
        Qi = Qi * np.sign(np.real(np.diag(Ri)) + (np.real(np.diag(Ri)) == 0))
    else:
        Qi = np.zeros((cod, 0), dtype=complex)
    dom_perp = scipy.linalg.null_space(Q1e.conj().T)
    cod_perp = scipy.linalg.null_space(Qi.conj().T)
    if dom_perp.shape[1] != cod_perp.shape[1]:
        raise ValueError("defect dimensions failed to match after padding")
    Ustar = Qi @ Q1e.conj().T + cod_perp @ dom_perp.conj().T
    return Xp, Ustar


def lurking_isometry_synthesize(Q0: NcMatrixPolynomial, Z0: MatrixTuple, a0, b0,
                                tol: float = 1e-9,
                                psd_tol: float = 1e-9,
                                rank_tol: float = 1e-10,
                                completion: str = "zero",
                                ) -> tuple[Colligation, SynthesisDiagnostics]:
    """Build a contractive colligation solving a0 S(Z0) = b0 from feasible data.

    Steps: factor the de Branges-Rovnyak Choi matrix at Z0 into a
    Kolmogorov map H, form the two vector families

        D(i, e) = [ (Q0(Z0)^* (x) I_X) H^* e  restricted to row i ;  row i of a0^* e ]
        R(i, e) = [ H^* e  restricted to row i                    ;  row i of b0^* e ]

    over coordinate rows i and basis vectors e of E^n, verify their Gram
    matrices agree, and map an orthonormal basis of span D through the
    correspondence D -> R.  The adjoint of the resulting operator is the
    colligation.

    ``completion`` selects the extension on the orthogonal complement of
    span D: ``"zero"`` (default) keeps the state dimension minimal and
    yields a contraction; ``"unitary"`` pads the state space so the two
    defect spaces match and extends by a unitary between them, when the
    block shapes allow it (ValueError otherwise).

    Raises ``NotPsdError`` when the data is infeasible and
    ``SynthesisConsistencyError`` on a Gram mismatch beyond 100 * tol.
    """
    if completion not in ("zero", "unitary"):
        raise ValueError("completion must be 'zero' or 'unitary'")
    a0 = np.asarray(a0, dtype=complex)
    b0 = np.asarray(b0, dtype=complex)
    n = Z0.n
    if a0.shape[0] != b0.shape[0] or a0.shape[0] % n or a0.shape[1] % n or b0.shape[1] % n:
        raise DimensionMismatchError("tangential data must be over the level of Z0")
    e_dim = a0.shape[0] // n
    y = a0.shape[1] // n
    u = b0.shape[1] // n
    r = Q0.r
    if not in_domain(Q0, Z0):
        raise DomainError("interpolation node lies outside the disk")

    choi = _dbr_choi(Q0, Z0, a0, b0)
    cert = psd_check(choi.matrix, rel_tol=psd_tol)
    if not cert.is_psd:
        raise NotPsdError(
            f"de Branges-Rovnyak Choi matrix is not PSD (min eig {cert.min_eig:.3g})"
        )
    factor = kolmogorov_factor(choi, rank_tol=rank_tol)
    X = factor.rank
    H = factor.stacked  # (e n) x (n X), domain C^n (x) X

    en = e_dim * n
    K = n * en  # family size: n coordinate rows, en basis vectors
    Hh = H.conj().T  # (n X) x (e n), columns indexed by the basis of E^n

    # top of the D family: rows (rho, i, x) of (Q0(Z0)^* (x) I_X) H^* e
    if X > 0:
        T1 = np.kron(_eval_poly(Q0, Z0).conj().T, np.eye(X)) @ Hh
        Dtop = T1.reshape(r, n, X, en).transpose(0, 2, 1, 3).reshape(r * X, K)
        Rtop = Hh.reshape(n, X, en).transpose(1, 0, 2).reshape(X, K)
    else:
        Dtop = np.zeros((0, K), dtype=complex)
        Rtop = np.zeros((0, K), dtype=complex)
    Dbot = a0.conj().T.reshape(y, n, en).reshape(y, K)
    Rbot = b0.conj().T.reshape(u, n, en).reshape(u, K)
    Dmat = np.vstack([Dtop, Dbot])
    Rmat = np.vstack([Rtop, Rbot])

    gram_D = Dmat.conj().T @ Dmat
    gram_R = Rmat.conj().T @ Rmat
    gram_scale = max(1.0, float(np.linalg.norm(gram_D)))
    gram_resid = float(np.linalg.norm(gram_D - gram_R)) / gram_scale
    if gram_resid > 100.0 * tol:
        raise SynthesisConsistencyError(
            f"Gram equality violated (residual {gram_resid:.3g}); "
            "the Agler identity failed on the factored kernel"
        )

    # rank-revealing pivoted QR on the D family; the same pivot order is
    # applied to the R family to define the isometry column by column
    Q, Rqr, piv = scipy.linalg.qr(Dmat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rqr))
    col_scale = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > QR_RANK_TOL * col_scale)) if col_scale > 0 else 0
    if rank > 0:
        R11 = Rqr[:rank, :rank]
        coeff = scipy.linalg.solve_triangular(R11, np.eye(rank))
        Q1 = Q[:, :rank]
        images = Rmat[:, piv[:rank]] @ coeff
    else:
        Q1 = np.zeros((r * X + y, 0), dtype=complex)
        images = np.zeros((X + u, 0), dtype=complex)

    if completion == "unitary":
        X, Ustar = _unitary_completion(Q1, images, X, u, y, r, rank)
        flags = ("unitary", "contractive")
        norm_U = 1.0
    else:
        # zero-extension keeps the state dimension minimal; clamp the rare
        # above-one singular values produced by the Gram residual
        Ustar = images @ Q1.conj().T
        norm_U = operator_norm(Ustar) if Ustar.size else 0.0
        if norm_U > 1.0:
            W, sv, Vh = np.linalg.svd(Ustar, full_matrices=False)
            Ustar = (W * np.minimum(sv, 1.0)) @ Vh
            norm_U = 1.0
        flags = ("contractive",)

    A = Ustar[:X, : r * X].conj().T
    C = Ustar[:X, r * X :].conj().T
    B = Ustar[X:, : r * X].conj().T
    D = Ustar[X:, r * X :].conj().T
    col = Colligation(X, u, y, r, A, B, C, D, flags=flags)

    S0 = transfer_eval(RealizedFunction(col, Q0), Z0)
    resid = float(np.linalg.norm(a0 @ S0 - b0, 2))
    diag_out = SynthesisDiagnostics(
        choi_min_eig=cert.min_eig,
        state_dim=X,
        family_size=K,
        gram_residual=gram_resid,
        colligation_norm=float(norm_U),
        interp_residual=resid,
    )
    return col, diag_out
