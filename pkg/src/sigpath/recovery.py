"""Recovering the coefficient matrix X from S = [[C; X, X, X]] by least squares."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .optimize import bfgs, trust_region
from .signatures import core_axis, core_generic, core_mono, generic_min_steps
from .tensor3 import DimensionError, as_mat, as_tensor3, congruence, cube_side, frobenius, mode_product

Classification = Literal["success", "illcond_failure", "failure"]


@dataclass(frozen=True)
class RecoveryConfig:
    grad_tol: float = 1e-10
    max_bfgs: int = 100
    max_tr: int = 1000
    restarts: int = 10
    seed: int = 0
    success_tol: float = 1e-5
    illcond_tol: float = 1e-8
    init_scale: float = 1.0
    newton: bool = False  # full Hessian in the trust-region model instead of Gauss-Newton

    def __post_init__(self):
        for name in ("grad_tol", "success_tol", "illcond_tol", "init_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_bfgs", "max_tr", "restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class RecoveryReport:
    X_star: np.ndarray
    residual: float
    rel_matrix_err: float | None
    classification: Classification | None
    restarts_used: int
    grad_norm: float
    iterations: tuple[int, int]
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        from .tensor3 import mat_to_json
        out = {
            "X_star": mat_to_json(self.X_star),
            "residual": self.residual,
            "restarts_used": self.restarts_used,
            "grad_norm": self.grad_norm,
            "iterations": {"bfgs": self.iterations[0], "tr": self.iterations[1]},
        }
        if self.rel_matrix_err is not None:
            out["rel_matrix_err"] = self.rel_matrix_err
            out["classification"] = self.classification
        return out


# --- objective ----------------------------------------------------------------

def _check(C, S, X):
    C = as_tensor3(C)
    S = as_tensor3(S)
    X = as_mat(X)
    m = cube_side(C)
    d = cube_side(S)
    if X.shape != (d, m):
        raise DimensionError(f"X must be {d}x{m} for a {m}-core and {d}-signature, got {X.shape}")
    return C, S, X


def cost(C, S, X) -> float:
    """||[[C; X, X, X]] - S||^2."""
    C, S, X = _check(C, S, X)
    return float(np.sum((congruence(C, X) - S) ** 2))


def _partials(C, X):
    """[[C; I, X, X]], [[C; X, I, X]], [[C; X, X, I]]."""
    C3 = mode_product(C, X, 3)
    C1 = mode_product(C, X, 1)
    return mode_product(C3, X, 2), mode_product(C3, X, 1), mode_product(C1, X, 2)


def _jt_apply(A1, A2, A3, R) -> np.ndarray:
    """J^T R for the map X -> [[C; X, X, X]], given the partial contractions."""
    return (np.einsum("ubc,vbc->uv", R, A1)
            + np.einsum("auc,avc->uv", R, A2)
            + np.einsum("abu,abv->uv", R, A3))


def grad_cost(C, S, X) -> np.ndarray:
    C, S, X = _check(C, S, X)
    R = congruence(C, X) - S
    return 2.0 * _jt_apply(*_partials(C, X), R)


def jacobian(C, X) -> np.ndarray:
    """Dense Jacobian of vec[[C; X, X, X]] with respect to vec X (d^3 x dm)."""
    d, m = X.shape
    A1, A2, A3 = _partials(C, X)
    I = np.eye(d)
    J = (np.einsum("au,vbc->abcuv", I, A1)
         + np.einsum("bu,avc->abcuv", I, A2)
         + np.einsum("cu,abv->abcuv", I, A3))
    return J.reshape(d ** 3, d * m)


class LeastSquares:
    """g(X) = ||[[C; X, X, X]] - S||^2 on flattened X, with model Hessians."""

    def __init__(self, C, S, m_cols: int):
        self.C = C
        self.S = S
        self.shape = (S.shape[0], m_cols)

    def fun_grad(self, x):
        X = x.reshape(self.shape)
        A1, A2, A3 = _partials(self.C, X)
        # [[C; X, X, X]] = [[A1; X, I, I]]
        R = np.tensordot(X, A1, axes=(1, 0)) - self.S
        return float(np.sum(R * R)), 2.0 * _jt_apply(A1, A2, A3, R).ravel()

    def gauss_newton(self, x):
        J = jacobian(self.C, x.reshape(self.shape))
        B = 2.0 * (J.T @ J)
        return lambda v: B @ v

    def newton(self, x):
        X = x.reshape(self.shape)
        J = jacobian(self.C, X)
        R = (congruence(self.C, X) - self.S).ravel()
        B = 2.0 * (J.T @ J)
        scale = max(np.linalg.norm(x), 1.0)
        Rt = R.reshape(self.S.shape)

        def jt_r(Y):
            return _jt_apply(*_partials(self.C, Y), Rt)

        def hv(v):
            # J(X)^T R is quadratic in X: its derivative along V is exact by
            # the symmetric difference
            t = scale / max(np.linalg.norm(v), 1e-300)
            V = v.reshape(self.shape)
            second = (jt_r(X + t * V) - jt_r(X - t * V)) / (2 * t)
            return B @ v + 2.0 * second.ravel()

        return hv


def signature_distance(C, S, X) -> float:
    return frobenius(congruence(C, X) - S)


def classify(X_star, X_true, S, C, config: RecoveryConfig = RecoveryConfig()) -> Classification:
    rel_err = frobenius(X_star - X_true) / frobenius(X_star)
    if rel_err < config.success_tol:
        return "success"
    if signature_distance(C, S, X_star) / frobenius(S) < config.illcond_tol:
        return "illcond_failure"
    return "failure"


def minimize(C, S, config: RecoveryConfig = RecoveryConfig(), X_true=None) -> RecoveryReport:
    """Best-of-restarts BFGS followed by trust-region refinement.

    Restarts stop early once the relative signature distance falls below
    ``config.illcond_tol``.  Without ``X_true`` the classification is
    ``"failure"`` if no near-exact fit was found and ``None`` otherwise.
    """
    C = as_tensor3(C)
    S = as_tensor3(S)
    m = cube_side(C)
    d = cube_side(S)
    problem = LeastSquares(C, S, m)
    rng = np.random.default_rng(config.seed)
    model = problem.newton if config.newton else problem.gauss_newton
    norm_S = frobenius(S)
    best = None
    used = 0
    for _ in range(config.restarts):
        used += 1
        x0 = config.init_scale * rng.standard_normal(d * m)
        r1 = bfgs(problem.fun_grad, x0, config.max_bfgs, config.grad_tol)
        r2 = trust_region(problem.fun_grad, model, r1.x, config.max_tr, config.grad_tol)
        run = (r2.f, r1, r2)
        if best is None or run[0] < best[0]:
            best = run
        if np.sqrt(best[0]) <= config.illcond_tol * norm_S:
            break
    f, r1, r2 = best
    X_star = r2.x.reshape(d, m)
    residual = signature_distance(C, S, X_star)
    if X_true is not None:
        X_true = as_mat(X_true)
        rel = frobenius(X_star - X_true) / frobenius(X_star)
        label = classify(X_star, X_true, S, C, config)
    else:
        rel = None
        label = None if residual <= config.illcond_tol * norm_S else "failure"
    return RecoveryReport(X_star, residual, rel, label, used, r2.grad_norm,
                          (r1.iterations, r2.iterations), r1.history + r2.history[1:])


# --- experiments ----------------------------------------------------------------

DICT_CODES = {"axis": 0, "mono": 1, "generic": 2}


def _trial(args):
    dictionary, m, d, trial, config = args
    ss = np.random.SeedSequence([config.seed, DICT_CODES[dictionary], m, d, trial])
    core_seed, x_seed, opt_seed = ss.generate_state(3)
    if dictionary == "axis":
        C = core_axis(m)
    elif dictionary == "mono":
        C = core_mono(m)
    else:
        C = core_generic(m, generic_min_steps(m), int(core_seed))
    X = np.random.default_rng(x_seed).standard_normal((d, m))
    S = congruence(C, X)
    rep = minimize(C, S, replace(config, seed=int(opt_seed)), X_true=X)
    return m, d, rep.classification, rep.residual, sum(rep.iterations)


@dataclass
class GridCell:
    m: int
    d: int
    trials: int
    successes: int = 0
    illcond: int = 0
    residuals: list = field(default_factory=list)
    iters: list = field(default_factory=list)

    @property
    def success_pct(self) -> float:
        return 100.0 * self.successes / self.trials

    def row(self) -> list:
        return [self.m, self.d, self.success_pct, self.illcond,
                float(np.mean(self.residuals)), float(np.mean(self.iters))]


GRID_HEADER = ["m", "d", "success_pct", "illcond_count", "mean_residual", "mean_iters"]


def worker_count() -> int:
    env = os.environ.get("SIGPATH_THREADS")
    n = int(env) if env else (os.cpu_count() or 1)
    return max(1, n)


def experiment_grid(dictionary: str, m_range, d_range, trials: int,
                    config: RecoveryConfig = RecoveryConfig(), workers: int | None = None) -> list[GridCell]:
    """Recovery rates over all (m, d) cells with m <= d."""
    if dictionary not in DICT_CODES:
        raise ValueError(f"unknown dictionary {dictionary!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cells = {(m, d): GridCell(m, d, trials) for m in m_range for d in d_range if m <= d}
    jobs = [(dictionary, m, d, t, config) for (m, d) in cells for t in range(trials)]
    workers = worker_count() if workers is None else workers
    if workers == 1:
        results = map(_trial, jobs)
    else:
        pool = ProcessPoolExecutor(workers)
        results = pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    for m, d, label, residual, iters in results:
        cell = cells[(m, d)]
        cell.successes += label == "success"
        cell.illcond += label == "illcond_failure"
        cell.residuals.append(residual)
        cell.iters.append(iters)
    if workers != 1:
        pool.shutdown()
    return list(cells.values())


def write_grid_csv(cells, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GRID_HEADER)
        for c in cells:
            w.writerow(c.row())
