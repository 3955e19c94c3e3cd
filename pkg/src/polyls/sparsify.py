"""Constructive sparsification of feasible representations.

Given a matrix ``Q``, a polyhedron ``P``, and a feasible ``w0``, the main
routine walks ``w`` along directions that leave ``Q w`` unchanged and keep
already-binding rows binding, until no such direction remains. Each accepted
step binds at least one new constraint row, so the output represents the same
point ``Q w0`` while binding provably many rows. Companion routines cover the
simplex-excess post-processing step, convex/conical support reduction, and a
rank certificate for local uniqueness of the result.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_array, rank_factor, solve_ls_equality
from .polyhedron import Polyhedron, make_orthant, make_simplex

# Rebuild the maintained null basis from scratch this often to cap drift from
# the incremental rank-one updates.
_REBUILD_EVERY = 50


class NoIntersectionError(RuntimeError):
    """The direction is orthogonal to every constraint row: no step exists."""


@dataclass(frozen=True)
class ToleranceSet:
    """Numeric thresholds for the sparsifier.

    ``binding_tol``/``feas_tol`` follow the polyhedron defaults;
    ``rank_rel_tol`` of None uses the shape-dependent default;
    ``zero_tol`` decides when a directional derivative ``a_i . v`` counts
    as zero (scaled by ``||a_i|| * ||v||``).
    """

    binding_tol: float = 1e-9
    feas_tol: float = 1e-9
    rank_rel_tol: float | None = None
    zero_tol: float = 1e-12


@dataclass
class SparsifyResult:
    """Outcome of a sparsification run.

    ``binding`` indexes into the inequality rows of the polyhedron (the rows
    outside its equality set). ``guarantee`` is the promised minimum binding
    count; it is certified only when ``certified`` is true, i.e. when no
    walking direction turned out orthogonal to every constraint row.
    """

    w: np.ndarray
    binding: np.ndarray
    binding_rank: int
    guarantee: int
    reconstruction_error: float
    steps_taken: int
    certified: bool


def null_step(A_free, b_free, w, v, zero_tol: float = 1e-12):
    """First constraint hit when moving ``w`` along ``v`` in either direction.

    For each row with ``a_i . v != 0`` the crossing parameter is
    ``t_i = (b_i - a_i . w) / (a_i . v)``; the smallest-magnitude crossing
    wins, preferring positive ``t`` and then the smallest row index on exact
    ties. Raises :class:`NoIntersectionError` when ``v`` is orthogonal to
    every row.
    """
    A = np.atleast_2d(np.asarray(A_free, dtype=float))
    b = np.atleast_1d(np.asarray(b_free, dtype=float)).ravel()
    w = np.asarray(w, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    av = A @ v
    row_scale = np.linalg.norm(A, axis=1) * np.linalg.norm(v)
    crossing = np.abs(av) > zero_tol * np.maximum(row_scale, 1e-300)
    if not crossing.any():
        raise NoIntersectionError("direction does not cross any constraint")
    idx = np.flatnonzero(crossing)
    t = (b[idx] - A[idx] @ w) / av[idx]
    # Order by |t|, then prefer t > 0, then the smallest row index.
    order = np.lexsort((idx, t <= 0, np.abs(t)))
    best = order[0]
    return float(t[best]), int(idx[best])


def _drop_direction(N: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Shrink an orthonormal basis ``N`` to directions with ``z . coeff = 0``.

    ``z`` holds the components of a new constraint row in the basis
    coordinates; a Householder reflection rotates it onto the first axis and
    the remaining columns span the reduced space.
    """
    k = N.shape[1]
    znorm = np.linalg.norm(z)
    if znorm == 0.0 or k == 0:
        return N
    u = z.copy()
    u[0] += np.sign(z[0]) * znorm if z[0] != 0 else znorm
    H = np.eye(k) - 2.0 * np.outer(u, u) / (u @ u)
    return N @ H[:, 1:]


def _orient(B: np.ndarray) -> np.ndarray:
    if B.size == 0:
        return B
    idx = np.argmax(np.abs(B), axis=0)
    signs = np.sign(B[idx, np.arange(B.shape[1])])
    signs[signs == 0] = 1.0
    return B * signs


def sparsify(Q, P: Polyhedron, w0, tol: ToleranceSet = ToleranceSet()) -> SparsifyResult:
    """Rewrite ``w0`` as a feasible point binding many constraint rows.

    The polyhedron is first reduced onto its affine part; the walk then
    repeatedly picks a unit direction that both preserves ``Q w`` and keeps
    the current binding rows fixed, steps to the nearest constraint
    hyperplane, and snaps the hit row's slack to exactly zero. Directions
    orthogonal to every constraint row are skipped and clear ``certified``.
    """
    Qv = as_array(Q)
    w0 = np.asarray(w0, dtype=float).ravel()
    p = P.n_vars
    if Qv.shape[1] != p or w0.shape[0] != p:
        raise ValueError("Q, P and w0 disagree on the number of variables")
    report = P.binding_report(w0, tol.binding_tol, tol.feas_tol)
    if not report.is_feasible:
        raise ValueError("w0 is not feasible for the polyhedron")

    red = P.reduce(tol.rank_rel_tol)
    V, xi, A_red, b_red = red.V, red.xi, red.A, red.b
    dim = V.shape[1]
    x_target = Qv @ w0
    wp = V.T @ (w0 - xi)
    Qp = Qv @ V

    # The walk only certifies the guaranteed count when no null direction of
    # Qp is also a null direction of the reduced constraints.
    rank_Qp = rank_factor(Qp, tol.rank_rel_tol).rank
    stacked_rank = rank_factor(np.vstack([Qp, A_red]), tol.rank_rel_tol).rank
    certified = stacked_rank == dim

    slacks = b_red - A_red @ wp
    binding_mask = np.abs(slacks) <= tol.binding_tol
    N = rank_factor(
        np.vstack([Qp, A_red[binding_mask]]), tol.rank_rel_tol
    ).null_basis
    N = _orient(N)

    a_scale = np.maximum(np.linalg.norm(A_red, axis=1), 1e-300) if A_red.size else np.zeros(0)
    steps = 0
    while N.shape[1] > 0:
        stepped = False
        for col in range(N.shape[1]):
            d = N[:, col]
            ad = A_red @ d
            crossing = np.abs(ad) > tol.zero_tol * a_scale
            crossing &= ~binding_mask
            if not crossing.any():
                if np.abs(ad).max(initial=0.0) <= tol.zero_tol * a_scale.max(initial=1.0):
                    certified = False
                continue
            idx = np.flatnonzero(crossing)
            t = slacks[idx] / ad[idx]
            order = np.lexsort((idx, t <= 0, np.abs(t)))
            hit = int(idx[order[0]])
            wp = wp + float(t[order[0]]) * d
            # Snap the hit row's slack to exactly zero.
            a_hit = A_red[hit]
            wp = wp + ((b_red[hit] - a_hit @ wp) / (a_hit @ a_hit)) * a_hit
            slacks = b_red - A_red @ wp
            new_mask = np.abs(slacks) <= tol.binding_tol
            for row in np.flatnonzero(new_mask & ~binding_mask):
                z = N.T @ A_red[row]
                if np.linalg.norm(z) > tol.zero_tol * a_scale[row]:
                    N = _drop_direction(N, z)
            binding_mask = new_mask
            steps += 1
            if steps % _REBUILD_EVERY == 0:
                N = rank_factor(
                    np.vstack([Qp, A_red[binding_mask]]), tol.rank_rel_tol
                ).null_basis
            N = _orient(N)
            stepped = True
            break
        if not stepped:
            break

    w = xi + V @ wp
    ineq = P.inequality_rows
    A_ineq = P.A[ineq]
    b_ineq = P.b[ineq]
    final_slacks = b_ineq - A_ineq @ w
    binding = np.flatnonzero(np.abs(final_slacks) <= tol.binding_tol)

    S = P.maximal_affine
    rank_A = rank_factor(P.A, tol.rank_rel_tol).rank
    rank_A_S = rank_factor(P.A[S], tol.rank_rel_tol).rank if S.size else 0
    guarantee = max(0, min(rank_A - rank_A_S, dim - rank_Qp))
    binding_rank = rank_factor(A_ineq[binding], tol.rank_rel_tol).rank
    recon = float(np.linalg.norm(Qv @ w - x_target))
    return SparsifyResult(
        w=w,
        binding=binding,
        binding_rank=binding_rank,
        guarantee=guarantee,
        reconstruction_error=recon,
        steps_taken=steps,
        certified=certified,
    )


def reduce_isls_excess(X_active, beta_active, C: float,
                       rank_tol: float | None = None) -> np.ndarray:
    """Shrink the support of a simplex-feasible fit without changing it.

    While the support exceeds the rank of its columns, a kernel direction of
    those columns with non-positive coordinate sum is followed until a
    coordinate hits zero; the fit ``X beta`` and the constraint
    ``sum(beta) <= C`` are both preserved. Returns the reduced coefficient
    vector (same length as the input).
    """
    Xv = as_array(X_active)
    beta = np.asarray(beta_active, dtype=float).ravel().copy()
    if Xv.shape[1] != beta.shape[0]:
        raise ValueError("X_active and beta_active disagree on length")
    if beta.sum() > C + 1e-9 * max(1.0, abs(C)):
        raise ValueError("coordinate sum exceeds the budget C")
    while True:
        idx = np.flatnonzero(beta > 0.0)
        fac = rank_factor(Xv[:, idx], rank_tol)
        if idx.size <= fac.rank or fac.null_basis.shape[1] == 0:
            return beta
        v = fac.null_basis[:, 0]
        if v.sum() > 0.0:
            v = -v
        neg = np.flatnonzero(v < 0.0)
        steps = beta[idx[neg]] / (-v[neg])
        j = int(np.argmin(steps))
        beta[idx] += steps[j] * v
        beta[idx[neg[j]]] = 0.0
        beta[beta < 0.0] = 0.0  # clear rounding dust from the step


def caratheodory_reduce(Q, weights, conical: bool = False,
                        tol: ToleranceSet = ToleranceSet()) -> SparsifyResult:
    """Reduce a convex or conical combination to few supporting columns.

    Convex mode checks the weights sum to one and walks within the unit
    simplex (support ends at ``rank(Q) + 1`` columns at most); conical mode
    walks within the non-negative orthant (at most ``rank(Q)`` columns). The
    combination ``Q @ weights`` is preserved.
    """
    Qv = as_array(Q)
    w = np.asarray(weights, dtype=float).ravel()
    if Qv.shape[1] != w.shape[0]:
        raise ValueError("Q and weights disagree on length")
    if (w < -tol.feas_tol).any():
        raise ValueError("weights must be non-negative")
    w = np.maximum(w, 0.0)
    p = w.shape[0]
    if conical:
        P = make_orthant(p)
    else:
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("convex weights must sum to one")
        P = make_simplex(p, 1.0, equality=True)
    return sparsify(Qv, P, w, tol)


def verify_local_uniqueness(Q, P: Polyhedron, result: SparsifyResult,
                            rank_tol: float | None = None) -> bool:
    """Certify that the sparsified point is pinned down by its binding rows.

    Stacks ``Q``, the equality rows, and the binding inequality rows; full
    column rank means the linear system they define has a unique solution,
    so the representative is the only point of the polyhedron on that face
    reproducing ``Q w``.
    """
    Qv = as_array(Q)
    S = P.maximal_affine
    ineq = P.inequality_rows
    stacked = np.vstack([Qv, P.A[S], P.A[ineq][result.binding]])
    return rank_factor(stacked, rank_tol).rank == P.n_vars
