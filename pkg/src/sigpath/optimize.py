"""Small dense optimizers: BFGS with Armijo backtracking and a Steihaug-CG
trust-region method.  Both work on flat float vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
TR_SHRINK = 0.25
TR_EXPAND = 2.0
TR_ACCEPT = 0.1


@dataclass
class OptResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    history: list = field(default_factory=list)


def bfgs(fun_grad: Callable, x0, max_iter: int = 100, grad_tol: float = 1e-10,
         max_backtracks: int = 60) -> OptResult:
    """Dense inverse-Hessian BFGS; step 1 first, halved until the Armijo
    condition f(x + a p) <= f(x) + c1 a g.p holds."""
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    n = x.size
    H = np.eye(n)
    history = [f]
    it = 0
    first = True
    while it < max_iter and np.linalg.norm(g) >= grad_tol:
        p = -H @ g
        slope = g @ p
        if slope >= 0:
            # lost descent; restart from steepest descent
            H = np.eye(n)
            p = -g
            slope = g @ p
        a = 1.0
        for _ in range(max_backtracks):
            x_new = x + a * p
            f_new, g_new = fun_grad(x_new)
            if f_new <= f + ARMIJO_C1 * a * slope:
                break
            a *= BACKTRACK
        else:
            break
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if first:
                H = np.eye(n) * (sy / (y @ y))
                first = False
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * (y @ Hy) + rho) * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        it += 1
    return OptResult(x, f, float(np.linalg.norm(g)), it, history)


def steihaug_cg(g: np.ndarray, hessvec: Callable, delta: float, tol: float,
                max_iter: int) -> np.ndarray:
    """Approximately minimize g.p + p.H p / 2 over ||p|| <= delta."""
    p = np.zeros_like(g)
    r = g.copy()
    d = -r
    rr = r @ r
    if np.sqrt(rr) < tol:
        return p
    for _ in range(max_iter):
        Hd = hessvec(d)
        dHd = d @ Hd
        if dHd <= 0:
            return p + _to_boundary(p, d, delta) * d
        alpha = rr / dHd
        p_next = p + alpha * d
        if np.linalg.norm(p_next) >= delta:
            return p + _to_boundary(p, d, delta) * d
        p = p_next
        r = r + alpha * Hd
        rr_new = r @ r
        if np.sqrt(rr_new) < tol:
            return p
        d = -r + (rr_new / rr) * d
        rr = rr_new
    return p


def _to_boundary(p, d, delta):
    """Positive tau with ||p + tau d|| = delta."""
    a = d @ d
    b = 2 * (p @ d)
    c = p @ p - delta * delta
    return (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)


def trust_region(fun_grad: Callable, hessvec_at: Callable, x0, max_iter: int = 1000,
                 grad_tol: float = 1e-10, delta0: float | None = None) -> OptResult:
    """Trust-region method with a Steihaug-CG subproblem solver.

    ``hessvec_at(x)`` returns a function v -> B v for the model Hessian at x.
    Stops on the gradient tolerance, the iteration cap, or a collapsed radius.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    delta = delta0 if delta0 is not None else max(1.0, np.linalg.norm(x))
    delta_max = 1e3 * max(1.0, np.linalg.norm(x))
    history = [f]
    it = 0
    hv = hessvec_at(x)
    while it < max_iter:
        gn = np.linalg.norm(g)
        if gn < grad_tol or f == 0.0:
            break
        if delta < 1e-15 * max(1.0, np.linalg.norm(x)):
            break
        p = steihaug_cg(g, hv, delta, min(0.5, np.sqrt(gn)) * gn, 2 * x.size)
        predicted = -(g @ p + 0.5 * (p @ hv(p)))
        x_new = x + p
        f_new, g_new = fun_grad(x_new)
        if predicted <= 0:
            rho = -1.0
        else:
            rho = (f - f_new) / predicted
        pn = np.linalg.norm(p)
        if rho < 0.25:
            delta = TR_SHRINK * pn if pn > 0 else TR_SHRINK * delta
        elif rho > 0.75 and pn >= 0.99 * delta:
            delta = min(TR_EXPAND * delta, delta_max)
        if rho > TR_ACCEPT and f_new < f:
            x, f, g = x_new, f_new, g_new
            hv = hessvec_at(x)
            history.append(f)
        it += 1
    return OptResult(x, f, float(np.linalg.norm(g)), it, history)
