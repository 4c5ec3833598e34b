"""Dense order-3 tensor arithmetic.

Tensors are plain ``numpy`` arrays of shape ``(n1, n2, n3)`` and matrices are
arrays of shape ``(rows, cols)``.  C-order storage is the on-disk layout too:
entry ``(i, j, k)`` sits at offset ``i*n2*n3 + j*n3 + k``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

RANK_TOL = 1e-10


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


def as_tensor3(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.ndim != 3:
        raise DimensionError(f"expected an order-3 tensor, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("tensor has non-finite entries")
    return T


def as_mat(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def cube_side(T: np.ndarray) -> int:
    n1, n2, n3 = T.shape
    if not n1 == n2 == n3:
        raise DimensionError(f"expected a cubical tensor, got shape {T.shape}")
    return n1


def mode_product(T: np.ndarray, A: np.ndarray, mode: int) -> np.ndarray:
    """Multiply ``T`` by ``A`` along ``mode`` (1, 2 or 3): contracts A's columns
    with that index of T."""
    if T.shape[mode - 1] != A.shape[1]:
        raise DimensionError(
            f"mode-{mode} size {T.shape[mode - 1]} does not match {A.shape[1]} columns"
        )
    out = np.tensordot(A, T, axes=(1, mode - 1))
    # tensordot puts the new axis first
    return np.moveaxis(out, 0, mode - 1)


def multilinear(T, A, B, Cm) -> np.ndarray:
    """[[T; A, B, C]] computed as three successive mode products."""
    return mode_product(mode_product(mode_product(T, A, 1), B, 2), Cm, 3)


def congruence(C, X) -> np.ndarray:
    """The congruence action [[C; X, X, X]].

    Entry ``(a, b, c)`` equals ``sum_{ijk} C[i,j,k] X[a,i] X[b,j] X[c,k]``.
    """
    C = as_tensor3(C)
    X = as_mat(X)
    m = cube_side(C)
    if X.shape[1] != m:
        raise DimensionError(f"core has side {m} but X has {X.shape[1]} columns")
    return multilinear(C, X, X, X)


def flatten(T, mode: int) -> np.ndarray:
    """Mode-``mode`` flattening: rows indexed by that mode, columns by the two
    remaining indices in lexicographic order (earlier mode slower)."""
    T = np.asarray(T, dtype=float)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    order = [mode - 1] + [a for a in range(3) if a != mode - 1]
    P = np.transpose(T, order)
    return P.reshape(P.shape[0], -1)


def concat_flatten(T) -> np.ndarray:
    """Horizontal concatenation of the three flattenings, an m x 3m^2 matrix."""
    T = np.asarray(T, dtype=float)
    cube_side(T)
    return np.hstack([flatten(T, 1), flatten(T, 2), flatten(T, 3)])


def frobenius(A) -> float:
    return float(np.sqrt(np.sum(np.square(A))))


def singular_values(A) -> np.ndarray:
    A = as_mat(A)
    if A.size == 0:
        raise ValueError("empty matrix")
    # LinAlgError propagates on non-convergence
    return np.linalg.svd(A, compute_uv=False)


def smallest_singular(A) -> float:
    return float(singular_values(A)[-1])


def numerical_rank(A, tol: float = RANK_TOL) -> int:
    s = singular_values(A)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def pseudo_inverse(A) -> np.ndarray:
    """Moore-Penrose inverse; singular values below max(r, c) * s_max * 1e-14
    are treated as zero."""
    A = as_mat(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = max(A.shape) * (s[0] if s.size else 0.0) * 1e-14
    inv = np.zeros_like(s)
    keep = s > cutoff
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def cond_frobenius(X) -> float:
    """kappa(X) = ||X||_F * ||X^+||_F."""
    X = as_mat(X)
    if not np.any(X):
        raise ValueError("condition number of the zero matrix is undefined")
    return frobenius(X) * frobenius(pseudo_inverse(X))


# --- JSON wire format -------------------------------------------------------

def tensor_to_json(T) -> dict:
    T = as_tensor3(T)
    return {"dims": list(T.shape), "data": [float(v) for v in T.ravel()]}


def tensor_from_json(obj: dict) -> np.ndarray:
    dims = obj["dims"]
    data = obj["data"]
    if len(dims) != 3:
        raise DimensionError(f"dims must have length 3, got {dims}")
    if len(data) != int(np.prod(dims)):
        raise DimensionError(f"data length {len(data)} does not match dims {dims}")
    return as_tensor3(np.array(data, dtype=float).reshape(dims))


def mat_to_json(A) -> dict:
    A = as_mat(A)
    return {"rows": A.shape[0], "cols": A.shape[1], "data": [float(v) for v in A.ravel()]}


def mat_from_json(obj: dict) -> np.ndarray:
    r, c, data = obj["rows"], obj["cols"], obj["data"]
    if len(data) != r * c:
        raise DimensionError(f"data length {len(data)} does not match {r}x{c}")
    return as_mat(np.array(data, dtype=float).reshape(r, c))


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")
