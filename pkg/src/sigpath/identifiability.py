"""Exact and numerical identifiability checks for core tensors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .tensor3 import (
    RANK_TOL,
    DimensionError,
    as_tensor3,
    concat_flatten,
    cond_frobenius,
    cube_side,
    flatten,
    frobenius,
    numerical_rank,
    singular_values,
)


@dataclass(frozen=True)
class BoundsReport:
    m: int
    norm_C: float
    sigma_flat: tuple[float, float, float]
    sigma_concat: float
    upper_bound: float
    lower_bound: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["sigma_flat"] = list(self.sigma_flat)
        return out

    def csv_row(self) -> list:
        return [self.m, self.norm_C, *self.sigma_flat, self.sigma_concat,
                self.lower_bound, self.upper_bound]


CSV_HEADER = ["m", "norm_C", "sigma1", "sigma2", "sigma3", "sigma_concat",
              "lower_bound", "upper_bound"]


def is_symmetrically_concise(T, tol: float = RANK_TOL) -> bool:
    T = as_tensor3(T)
    return numerical_rank(concat_flatten(T), tol) == cube_side(T)


def nonconcise_witness(T, tol: float = RANK_TOL) -> np.ndarray | None:
    """Return Z = I + v v^T in the stabilizer of T if some unit v annihilates
    every flattening, else None."""
    T = as_tensor3(T)
    m = cube_side(T)
    U, s, _ = np.linalg.svd(concat_flatten(T), full_matrices=True)
    if s[0] > 0.0 and (s.size == m and s[-1] > tol * s[0]):
        return None
    v = U[:, -1]
    return np.eye(m) + np.outer(v, v)


def jacobian_j1(T) -> np.ndarray:
    """m^2 x m^2 block of the Jacobian of Z -> [[T; Z, Z, Z]] at Z = I for the
    slice k = 0: J1[(i,j),(u,v)] = d_ui t_vj0 + d_uj t_iv0 + d_u0 t_ijv."""
    T = as_tensor3(T)
    m = cube_side(T)
    I = np.eye(m)
    t0 = T[:, :, 0]
    J = (np.einsum("ui,vj->ijuv", I, t0)
         + np.einsum("uj,iv->ijuv", I, t0)
         + np.einsum("u,ijv->ijuv", I[0], T))
    return J.reshape(m * m, m * m)


def jacobian_j1_exact(T) -> list[list[Fraction]]:
    """Same as :func:`jacobian_j1` over the rationals; T is an array of Fractions."""
    T = np.asarray(T, dtype=object)
    m = T.shape[0]
    if T.shape != (m, m, m):
        raise DimensionError(f"expected a cubical tensor, got shape {T.shape}")
    zero = Fraction(0)
    J = [[zero] * (m * m) for _ in range(m * m)]
    for i in range(m):
        for j in range(m):
            row = J[i * m + j]
            for u in range(m):
                for v in range(m):
                    x = zero
                    if u == i:
                        x += T[v, j, 0]
                    if u == j:
                        x += T[i, v, 0]
                    if u == 0:
                        x += T[i, j, v]
                    row[u * m + v] = Fraction(x)
    return J


def _clear_denominators(A) -> tuple[list[list[int]], int]:
    """Scale each row to integers; returns (integer rows, product of row scales)."""
    rows = []
    scale = 1
    for r in A:
        r = [Fraction(x) for x in r]
        l = 1
        for x in r:
            l = l * x.denominator // math.gcd(l, x.denominator)
        rows.append([int(x * l) for x in r])
        scale *= l
    return rows, scale


def bareiss_det_int(M: list[list[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    A = [list(r) for r in M]
    n = len(A)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        rowk = A[k]
        for i in range(k + 1, n):
            rowi = A[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (akk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * A[n - 1][n - 1] if n else 1


def bareiss_det(A) -> Fraction:
    """Exact determinant of a square rational matrix."""
    n = len(A)
    if any(len(r) != n for r in A):
        raise DimensionError("determinant needs a square matrix")
    ints, scale = _clear_denominators(A)
    return Fraction(bareiss_det_int(ints), scale)


def factor_small_primes(n: int, primes=(2, 3, 5, 7, 11, 13, 17, 19)) -> tuple[dict[int, int], int]:
    """Trial division of |n| by ``primes``; returns (exponents, cofactor)."""
    n = abs(n)
    if n == 0:
        raise ValueError("cannot factor zero")
    exps = {}
    for p in primes:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            exps[p] = e
    return exps, n


def rank_mod_p(M: list[list[int]], p: int = 2_147_483_647) -> int:
    """Rank of an integer matrix over GF(p)."""
    A = np.array([[x % p for x in r] for r in M], dtype=np.int64)
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r, c] != 0), None)
        if piv is None:
            continue
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, c]), p - 2, p)
        A[rank] = (A[rank] * inv) % p
        nz = np.nonzero(A[rank + 1:, c])[0] + rank + 1
        if nz.size:
            # entries stay below p < 2^31, so products fit in int64
            A[nz] = (A[nz] - (A[nz, c:c + 1] * A[rank]) % p) % p
        rank += 1
        if rank == rows:
            break
    return rank


def finite_stabilizer_certificate(T, exact: bool = False, tol: float = RANK_TOL) -> bool:
    """True when J1 is invertible, which forces a finite stabilizer.

    Numeric mode compares sigma_min(J1) with ``tol * sigma_max``.  Exact mode
    takes a Fraction tensor and checks full rank of J1 modulo a large prime; a
    nonzero determinant mod p proves it nonzero over Q (False is inconclusive).
    """
    if exact:
        J, _ = _clear_denominators(jacobian_j1_exact(T))
        return rank_mod_p(J) == len(J)
    s = singular_values(jacobian_j1(T))
    return bool(s[0] > 0.0 and s[-1] > tol * s[0])


def kappa_bounds(C) -> BoundsReport:
    """Bracket kappa(C) between ||C|| / (7 m^1.5 s_concat) and
    ||C|| / max_i s^(i), s denoting smallest singular values."""
    C = as_tensor3(C)
    m = cube_side(C)
    norm = frobenius(C)
    sig = tuple(float(singular_values(flatten(C, i))[m - 1]) for i in (1, 2, 3))
    sc = float(singular_values(concat_flatten(C))[m - 1])
    best = max(sig)
    with np.errstate(divide="ignore"):
        upper = norm / best if best > 0 else math.inf
        lower = norm / (7.0 * m**1.5 * sc) if sc > 0 else math.inf
    return BoundsReport(m, norm, sig, sc, upper, lower)


def kappa_xc_upper(X, C) -> float:
    """kappa(X)^3 times the upper bound on kappa(C)."""
    X = np.asarray(X, dtype=float)
    m = cube_side(as_tensor3(C))
    if X.shape[1] != m:
        raise DimensionError(f"core has side {m} but X has {X.shape[1]} columns")
    if numerical_rank(X) < m:
        raise ValueError("X must have full column rank")
    return cond_frobenius(X) ** 3 * kappa_bounds(C).upper_bound


def mean_generic_bounds(m: int, samples: int, seed: int = 0, M: int | None = None) -> BoundsReport:
    """Field-wise mean of kappa_bounds over ``samples`` generic cores with
    seeds seed, seed+1, ...; M defaults to the smallest admissible step count."""
    from .signatures import core_generic, generic_min_steps

    if samples < 1:
        raise ValueError("samples must be >= 1")
    M = generic_min_steps(m) if M is None else M
    reps = [kappa_bounds(core_generic(m, M, seed + s)) for s in range(samples)]
    sig = tuple(float(np.mean([r.sigma_flat[i] for r in reps])) for i in range(3))
    return BoundsReport(m, float(np.mean([r.norm_C for r in reps])), sig,
                        float(np.mean([r.sigma_concat for r in reps])),
                        float(np.mean([r.upper_bound for r in reps])),
                        float(np.mean([r.lower_bound for r in reps])))
