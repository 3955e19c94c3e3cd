"""Independent reference solvers used to validate the main solver.

Neither routine shares code paths with the coordinate-descent solver: the
projected-gradient method handles medium instances, and an exhaustive
bound-pattern enumeration gives certified global optima for tiny ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import as_dense
from .solver import Bounds

_ENUM_MAX_P = 12
_POWER_ITERS = 20
_POWER_SAFETY = 1.01


@dataclass(frozen=True)
class OracleResult:
    beta: np.ndarray
    objective: float
    method: str
    converged: bool = True


def _lipschitz_upper_bound(Xv: np.ndarray) -> float:
    """Upper bound on the top eigenvalue of X'X by power iteration."""
    p = Xv.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_ITERS):
        w = Xv.T @ (Xv @ v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
    return _POWER_SAFETY * lam


def projected_gradient(X, y, bounds: Bounds, tol: float = 1e-8,
                       max_iters: int = 100_000) -> OracleResult:
    """Fixed-step projected gradient descent on the box-constrained problem.

    The step is ``1/L`` with ``L`` from :func:`_lipschitz_upper_bound`;
    iteration stops when ``||beta_next - beta|| <= tol * (1 + ||beta||)``.
    Exceeding ``max_iters`` is reported through ``converged=False``.
    """
    Xv = as_dense(X).values
    yv = np.asarray(y, dtype=float).ravel()
    n, p = Xv.shape
    if yv.shape[0] != n or bounds.size != p:
        raise ValueError("dimension mismatch")
    lo, up = bounds.lower, bounds.upper
    beta = np.clip(np.zeros(p), lo, up)
    L = _lipschitz_upper_bound(Xv)
    if L == 0.0:
        r = yv - Xv @ beta
        return OracleResult(beta, 0.5 * float(r @ r), "projected_gradient")
    step = 1.0 / L
    converged = False
    for _ in range(max_iters):
        grad = -(Xv.T @ (yv - Xv @ beta))
        beta_next = np.clip(beta - step * grad, lo, up)
        move = np.linalg.norm(beta_next - beta)
        beta = beta_next
        if move <= tol * (1.0 + np.linalg.norm(beta)):
            converged = True
            break
    r = yv - Xv @ beta
    return OracleResult(beta, 0.5 * float(r @ r), "projected_gradient", converged)


def enumerate_faces(X, y, bounds: Bounds, feas_tol: float = 1e-8) -> OracleResult:
    """Global optimum by enumerating bound patterns (requires ``p <= 12``).

    Every coordinate is pinned at a finite lower bound, a finite upper bound,
    or left free; for each pattern the free block is solved by least squares
    and the best feasible candidate wins. Free sets larger than ``min(n, p)``
    are skipped: some optimum always pins all but at most ``min(n, p)``
    coordinates, so the pruning never discards the optimal value.
    Ties in the objective keep the first pattern in lexicographic
    (lower, upper, free) order.
    """
    Xv = as_dense(X).values
    yv = np.asarray(y, dtype=float).ravel()
    n, p = Xv.shape
    if p > _ENUM_MAX_P:
        raise ValueError(f"enumeration supports at most {_ENUM_MAX_P} columns, got {p}")
    if yv.shape[0] != n or bounds.size != p:
        raise ValueError("dimension mismatch")
    lo, up = bounds.lower, bounds.upper

    options = []
    for i in range(p):
        opts = []
        if np.isfinite(lo[i]):
            opts.append(("L", lo[i]))
        if np.isfinite(up[i]) and up[i] != lo[i]:
            opts.append(("U", up[i]))
        if lo[i] != up[i]:
            opts.append(("F", None))
        options.append(opts)

    G = Xv.T @ Xv
    c = Xv.T @ yv
    # Coordinates without any finite bound can never be pinned, so they do not
    # count against the pruning cap.
    n_unbounded = int(np.count_nonzero(~np.isfinite(lo) & ~np.isfinite(up)))
    max_free = min(n, p) + n_unbounded
    best_obj = np.inf
    best_beta = None

    for pattern in itertools.product(*options):
        free = [i for i, (kind, _) in enumerate(pattern) if kind == "F"]
        if len(free) > max_free:
            continue
        beta = np.array([0.0 if v is None else v for _, v in pattern])
        if free:
            pinned = [i for i in range(p) if i not in free]
            rhs = c[free] - G[np.ix_(free, pinned)] @ beta[pinned]
            K = G[np.ix_(free, free)]
            try:
                wf = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                resid = yv - Xv[:, pinned] @ beta[pinned]
                wf, *_ = np.linalg.lstsq(Xv[:, free], resid, rcond=None)
            if (wf < lo[free] - feas_tol).any() or (wf > up[free] + feas_tol).any():
                continue
            beta[free] = np.clip(wf, lo[free], up[free])
        r = yv - Xv @ beta
        obj = 0.5 * float(r @ r)
        if obj < best_obj:
            best_obj = obj
            best_beta = beta
    if best_beta is None:
        raise ValueError("no feasible bound pattern found")
    return OracleResult(best_beta, best_obj, "enumeration")
