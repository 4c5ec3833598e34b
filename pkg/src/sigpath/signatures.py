"""Core tensors of dictionaries and signatures of paths up to order three."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor3 import (
    DimensionError,
    as_mat,
    as_tensor3,
    congruence,
    cube_side,
    frobenius,
    mat_from_json,
    mat_to_json,
    tensor_from_json,
    tensor_to_json,
)


class LoopPathError(ValueError):
    """The path is (numerically) a loop, so lower signatures cannot be recovered."""


@dataclass(frozen=True)
class SignatureTriple:
    sig1: np.ndarray  # (n,)
    sig2: np.ndarray  # (n, n)
    sig3: np.ndarray  # (n, n, n)

    def shuffle_defect(self) -> float:
        """Largest violation of c_i c_j = c_ij + c_ji and
        c_i c_jk = c_ijk + c_jik + c_jki."""
        c1, c2, c3 = self.sig1, self.sig2, self.sig3
        e2 = np.outer(c1, c1) - (c2 + c2.T)
        e3 = (np.einsum("i,jk->ijk", c1, c2)
              - c3 - np.transpose(c3, (1, 0, 2)) - np.transpose(c3, (2, 0, 1)))
        return float(max(np.max(np.abs(e2), initial=0.0), np.max(np.abs(e3), initial=0.0)))

    def to_json(self) -> dict:
        return {
            "sig1": [float(v) for v in self.sig1],
            "sig2": mat_to_json(self.sig2),
            "sig3": tensor_to_json(self.sig3),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SignatureTriple":
        return cls(np.array(obj["sig1"], dtype=float),
                   mat_from_json(obj["sig2"]),
                   tensor_from_json(obj["sig3"]))


@dataclass(frozen=True)
class LieData:
    """Degree 1, 2, 3 log-signature pieces: C = P^3/6 + (P⊗Q + Q⊗P)/2 + L."""
    P: np.ndarray
    Q: np.ndarray
    L: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return lie_reconstruct(self.P, self.Q, self.L)


def lie_reconstruct(P, Q, L) -> np.ndarray:
    P3 = np.einsum("i,j,k->ijk", P, P, P)
    PQ = np.einsum("i,jk->ijk", P, Q)
    QP = np.einsum("ij,k->ijk", Q, P)
    return P3 / 6 + (PQ + QP) / 2 + L


# --- dictionary cores -------------------------------------------------------

def _check_m(m: int) -> None:
    if m < 1:
        raise ValueError(f"dictionary size must be >= 1, got {m}")


def core_axis_exact(m: int) -> np.ndarray:
    """Piecewise-linear core as an object array of Fractions."""
    _check_m(m)
    C = np.full((m, m, m), Fraction(0), dtype=object)
    for i in range(m):
        for j in range(i, m):
            for k in range(j, m):
                if i < j < k:
                    C[i, j, k] = Fraction(1)
                elif i == j == k:
                    C[i, j, k] = Fraction(1, 6)
                else:
                    C[i, j, k] = Fraction(1, 2)
    return C


def core_mono_exact(m: int) -> np.ndarray:
    """Monomial core (t, t^2, ..., t^m) as Fractions: j/(i+j) * k/(i+j+k), 1-based."""
    _check_m(m)
    C = np.empty((m, m, m), dtype=object)
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            for k in range(1, m + 1):
                C[i - 1, j - 1, k - 1] = Fraction(j, i + j) * Fraction(k, i + j + k)
    return C


def core_axis(m: int) -> np.ndarray:
    _check_m(m)
    i, j, k = np.indices((m, m, m))
    C = np.zeros((m, m, m))
    C[(i < j) & (j < k)] = 1.0
    C[((i < j) & (j == k)) | ((i == j) & (j < k))] = 0.5
    C[(i == j) & (j == k)] = 1.0 / 6.0
    return C


def core_mono(m: int) -> np.ndarray:
    _check_m(m)
    i, j, k = np.indices((m, m, m)) + 1.0
    return j / (i + j) * k / (i + j + k)


def universal_dim(m: int) -> int:
    """Dimension of the variety of third signatures of paths in R^m."""
    return (2 * m**3 + 3 * m**2 + m) // 6


def generic_min_steps(m: int) -> int:
    """Smallest M with M > m^2/3 + m/2 + 1/6."""
    return (2 * m * m + 3 * m + 1) // 6 + 1


def core_generic(m: int, M: int, seed: int) -> np.ndarray:
    """Third signature of a random M-step path in R^m with N(0,1) steps."""
    _check_m(m)
    if 6 * M <= 2 * m * m + 3 * m + 1:
        raise ValueError(f"need M > m^2/3 + m/2 + 1/6 (M >= {generic_min_steps(m)}), got {M}")
    rng = np.random.default_rng(seed)
    steps = rng.standard_normal((m, M))
    return sig_pl(steps).sig3


# --- signatures -------------------------------------------------------------

def sig_pl(steps) -> SignatureTriple:
    """Signature triple of the piecewise-linear path whose steps are the columns
    of ``steps``, by Chen's identity applied one segment at a time."""
    Y = as_mat(steps)
    if Y.shape[1] < 1:
        raise ValueError("a path needs at least one step")
    d = Y.shape[0]
    s1 = np.zeros(d)
    s2 = np.zeros((d, d))
    s3 = np.zeros((d, d, d))
    for y in Y.T:
        yy = np.outer(y, y)
        s3 = (s3 + np.multiply.outer(s2, y) + np.multiply.outer(s1, yy) / 2
              + np.multiply.outer(yy, y) / 6)
        s2 = s2 + np.outer(s1, y) + yy / 2
        s1 = s1 + y
    return SignatureTriple(s1, s2, s3)


def sig_of_matrix(C, X, check: bool = True) -> SignatureTriple:
    """Signature triple of the path X·psi where psi has core tensor C."""
    C = as_tensor3(C)
    X = as_mat(X)
    if check:
        member, minor = universal_membership(C, 1e-8)
        if not member:
            warnings.warn(f"core tensor is not in the universal variety (max minor {minor:.3g})",
                          stacklevel=2)
    base = recover_lower(C)
    if X.shape[1] != base.sig1.shape[0]:
        raise DimensionError(f"core has side {base.sig1.shape[0]} but X has {X.shape[1]} columns")
    return SignatureTriple(X @ base.sig1, X @ base.sig2 @ X.T, congruence(C, X))


def recover_lower(S) -> SignatureTriple:
    """First and second signatures from the third one via the shuffle relations.

    Raises LoopPathError when every ``|6 s_iii|`` is below ``1e-12 * ||S||``,
    i.e. every ``|c_i|`` below ``1e-4 * ||S||^(1/3)``.  The test is made before
    taking cube roots, which would blow rounding noise of a true loop
    (about 1e-17) up to about 1e-6.
    """
    S = as_tensor3(S)
    cube_side(S)
    diag = 6.0 * np.einsum("iii->i", S)
    c1 = np.cbrt(diag)
    p = int(np.argmax(np.abs(c1)))
    norm = frobenius(S)
    if norm == 0.0 or abs(diag[p]) <= 1e-12 * norm:
        raise LoopPathError("all diagonal entries vanish: the path is a loop")
    # c_p c_jk = s_pjk + s_jpk + s_jkp
    c2 = (S[p, :, :] + S[:, p, :] + S[:, :, p]) / c1[p]
    return SignatureTriple(c1, c2, S)


def _sym_forms(C: np.ndarray) -> np.ndarray:
    """E[k,i,j] = c_kij + c_ikj + c_ijk (the three placements of k)."""
    return C + np.transpose(C, (1, 0, 2)) + np.transpose(C, (2, 0, 1))


def extract_lie(C) -> LieData:
    """Split a core tensor into P (first signature), skew Q and residual L."""
    C = as_tensor3(C)
    P = recover_lower(C).sig1
    k = int(np.argmax(np.abs(P)))
    E = _sym_forms(C)[k]
    # p_k q_ij = (E[k,i,j] - E[k,j,i]) / 2
    Q = (E - E.T) / (2.0 * P[k])
    Q = (Q - Q.T) / 2  # exactly skew
    PQ = np.einsum("i,jk->ijk", P, Q)
    QP = np.einsum("ij,k->ijk", Q, P)
    L = C - np.einsum("i,j,k->ijk", P, P, P) / 6 - (PQ + QP) / 2
    return LieData(P, Q, L)


def hankel_matrix(C) -> np.ndarray:
    """The m x 2m^2 matrix H[C] of linear forms standing in for
    p_k p_i p_j (first block) and p_k q_ij (second block)."""
    C = as_tensor3(C)
    m = cube_side(C)
    E = _sym_forms(C)  # E[k,i,j]
    sym = E + np.transpose(E, (0, 2, 1))
    skew = (E - np.transpose(E, (0, 2, 1))) / 2
    return np.hstack([sym.reshape(m, m * m), skew.reshape(m, m * m)])


def universal_membership(C, tol: float = 1e-10) -> tuple[bool, float]:
    """Rank-one test on H[C]: all 2x2 minors below ``tol * ||C||^2``."""
    H = hankel_matrix(C)
    m = H.shape[0]
    worst = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            M = np.outer(H[a], H[b])
            worst = max(worst, float(np.max(np.abs(M - M.T))))
    return worst <= tol * frobenius(C) ** 2, worst
