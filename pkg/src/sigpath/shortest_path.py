"""Shortest piecewise-linear paths with a prescribed third signature.

The length penalty is driven to zero by continuation: minimize
``len(X)/lam + g(X)`` and double ``lam``, warm-starting from the last optimum.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .optimize import bfgs, trust_region
from .recovery import LeastSquares, RecoveryConfig, cost, grad_cost, signature_distance
from .signatures import core_axis, universal_dim
from .tensor3 import as_mat, as_tensor3, cube_side, frobenius


@dataclass(frozen=True)
class ContinuationConfig:
    lambda0: float = 1.0
    lambda_max: float = 2.0**30
    inner: RecoveryConfig = field(default_factory=lambda: RecoveryConfig(max_bfgs=200, max_tr=200))
    smooth_eps: float = 1e-9
    starts: int = 4
    seed: int = 0
    extra_doublings: int = 20
    res_tol: float = 1e-10  # relative to max(1, ||S||)

    def __post_init__(self):
        if not self.res_tol > 0:
            raise ValueError("res_tol must be positive")
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not self.lambda_max > self.lambda0:
            raise ValueError("lambda_max must exceed lambda0")


@dataclass
class ShortestResult:
    X: np.ndarray
    length: float
    residual: float
    converged: bool
    lam: float
    stages: int


def path_length(X) -> float:
    """Sum of Euclidean norms of the steps (columns)."""
    X = as_mat(X)
    return float(np.sum(np.linalg.norm(X, axis=0)))


def smoothed_length(X, eps: float = 1e-9) -> float:
    X = as_mat(X)
    return float(np.sum(np.sqrt(np.sum(X * X, axis=0) + eps * eps) - eps))


def smoothed_length_grad(X, eps: float = 1e-9) -> np.ndarray:
    X = as_mat(X)
    return X / np.sqrt(np.sum(X * X, axis=0) + eps * eps)


def regularized_cost(C, S, X, lam: float, eps: float = 1e-9) -> float:
    return smoothed_length(X, eps) / lam + cost(C, S, X)


def regularized_grad(C, S, X, lam: float, eps: float = 1e-9) -> np.ndarray:
    return smoothed_length_grad(X, eps) / lam + grad_cost(C, S, X)


class _Penalized:
    def __init__(self, C, S, m, eps):
        self.ls = LeastSquares(C, S, m)
        self.shape = self.ls.shape
        self.eps = eps
        self.lam = 1.0

    def fun_grad(self, x):
        f, g = self.ls.fun_grad(x)
        X = x.reshape(self.shape)
        n = np.sqrt(np.sum(X * X, axis=0) + self.eps ** 2)
        f += float(np.sum(n - self.eps)) / self.lam
        g = g + (X / n).ravel() / self.lam
        return f, g

    def hessvec_at(self, x):
        gn = self.ls.gauss_newton(x)
        X = x.reshape(self.shape)
        n = np.sqrt(np.sum(X * X, axis=0) + self.eps ** 2)

        def hv(v):
            V = v.reshape(self.shape)
            # per column: (I / n - x x^T / n^3) v
            lv = V / n - X * (np.sum(X * V, axis=0) / n ** 3)
            return gn(v) + lv.ravel() / self.lam

        return hv


def _solve_stage(problem, x, lam, inner: RecoveryConfig):
    problem.lam = lam
    r1 = bfgs(problem.fun_grad, x, inner.max_bfgs, inner.grad_tol)
    r2 = trust_region(problem.fun_grad, problem.hessvec_at, r1.x, inner.max_tr, inner.grad_tol)
    return r2.x


def _continuation(C, S, x0, config: ContinuationConfig, res_tol: float) -> ShortestResult | None:
    """Returns None when the iterate collapses onto X = 0, which is a local
    minimizer of the penalized objective for every lam (length grows
    linearly there while the fit term changes only to third order)."""
    m = C.shape[0]
    d = S.shape[0]
    problem = _Penalized(C, S, m, config.smooth_eps)
    x = x0
    floor = 1e-6 * np.linalg.norm(x0)
    lam = config.lambda0
    stages = 0
    lam_cap = config.lambda_max * 2.0 ** config.extra_doublings
    while True:
        x = _solve_stage(problem, x, lam, config.inner)
        stages += 1
        if np.linalg.norm(x) <= floor:
            return None
        res = signature_distance(C, S, x.reshape(d, m))
        if (lam >= config.lambda_max and res < res_tol) or lam >= lam_cap:
            break
        lam *= 2.0
    if res >= res_tol:
        # lam -> infinity limit: plain least squares from the current point
        ls = problem.ls
        x = trust_region(ls.fun_grad, ls.gauss_newton, x, config.inner.max_tr,
                         config.inner.grad_tol).x
        res = signature_distance(C, S, x.reshape(d, m))
    X = x.reshape(d, m)
    return ShortestResult(X, path_length(X), res, res < res_tol, lam, stages)


def shortest(S, m_steps: int, config: ContinuationConfig = ContinuationConfig()) -> ShortestResult:
    """Shortest m-step path whose third signature matches S, best over
    ``config.starts`` random starts.  No global optimality is claimed.

    Starts that collapse onto the zero path are redrawn, at most
    ``4 * config.starts`` extra times.
    """
    S = as_tensor3(S)
    d = cube_side(S)
    if m_steps * d < universal_dim(d):
        warnings.warn(f"{m_steps} steps in R^{d} give {m_steps * d} parameters, below the "
                      f"dimension {universal_dim(d)} of the signature variety: an exact match "
                      "is generically impossible", stacklevel=2)
    C = core_axis(m_steps)
    res_tol = config.res_tol * max(1.0, frobenius(S))
    rng = np.random.default_rng(config.seed)
    # steps of roughly the size needed to cover the displacement
    scale = config.inner.init_scale * max(frobenius(S) ** (1.0 / 3.0), 1e-3) / np.sqrt(m_steps)
    best = None
    done = 0
    for _ in range(5 * config.starts):
        x0 = scale * rng.standard_normal(d * m_steps)
        r = _continuation(C, S, x0, config, res_tol)
        if r is None:
            continue
        key = (not r.converged, r.length if r.converged else r.residual)
        if best is None or key < best[0]:
            best = (key, r)
        done += 1
        if done == config.starts:
            break
    if best is None:
        X = np.zeros((d, m_steps))
        return ShortestResult(X, 0.0, frobenius(S), frobenius(S) < res_tol, config.lambda0, 0)
    return best[1]


# --- export -------------------------------------------------------------------

def path_vertices(X) -> np.ndarray:
    """Vertices of the path as rows, starting at the origin."""
    X = as_mat(X)
    return np.vstack([np.zeros(X.shape[0]), np.cumsum(X.T, axis=0)])


def _svg_panel(P: np.ndarray, x0: float, label: str) -> tuple[str, float, float, float]:
    lo = P.min(axis=0)
    hi = P.max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-12)
    margin = 0.05 * span
    w = hi[0] - lo[0] + 2 * margin
    h = hi[1] - lo[1] + 2 * margin
    # flip y so the picture reads bottom-up
    pts = " ".join(f"{x0 + p[0] - lo[0] + margin:.6g},{hi[1] - p[1] + margin:.6g}" for p in P)
    body = (f'<polyline points="{pts}" fill="none" stroke="black" '
            f'stroke-width="{0.01 * span:.6g}"><title>{label}</title></polyline>')
    return body, w, h, span


def export_path(X, fmt: str) -> str:
    """Render the vertex list as csv, json or svg text."""
    V = path_vertices(X)
    d = V.shape[1]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([f"x{i + 1}" for i in range(d)])
        w.writerows(V.tolist())
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"vertices": V.tolist()}) + "\n"
    if fmt == "svg":
        if d == 2:
            planes = [(0, 1)]
        elif d == 3:
            planes = [(0, 1), (0, 2), (1, 2)]
        else:
            raise ValueError(f"svg export needs a path in R^2 or R^3, got R^{d}")
        parts = []
        x = 0.0
        height = 0.0
        for a, b in planes:
            body, w, h, span = _svg_panel(V[:, [a, b]], x, f"x{a + 1}-x{b + 1}")
            parts.append(body)
            x += w + 0.05 * span
            height = max(height, h)
        width = x - 0.05 * span
        return ('<svg xmlns="http://www.w3.org/2000/svg" '
                f'viewBox="0 0 {width:.6g} {height:.6g}">\n' + "\n".join(parts) + "\n</svg>\n")
    raise ValueError(f"unknown format {fmt!r}")
