"""Polyhedra ``{x : A x <= b}`` with declared always-binding constraints.

A polyhedron carries an index set of rows that hold with equality at every
feasible point (its affine part). Constructors for the feasible sets of the
supported regression problems declare that set analytically; it is never
auto-detected, since doing so in general needs a linear-programming oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import default_rank_tol, rank_factor, solve_ls_equality

DEFAULT_BINDING_TOL = 1e-9
DEFAULT_FEAS_TOL = 1e-9


class EmptyPolyhedronError(ValueError):
    """The declared equality constraints are inconsistent: no feasible point."""


@dataclass(frozen=True)
class BindingReport:
    """Slack audit of a point against every constraint row.

    ``binding`` lists the rows whose slack ``b_i - a_i.x`` is within the
    binding tolerance of zero; ``is_feasible`` is true when no slack is more
    negative than the feasibility tolerance.
    """

    binding: np.ndarray
    slacks: np.ndarray
    is_feasible: bool


@dataclass(frozen=True)
class Reduction:
    """Change of variables onto the affine part: ``x = xi + V x'``.

    ``V`` has orthonormal columns spanning the kernel of the equality rows,
    ``xi`` satisfies those rows, and ``(A, b)`` are the inequality rows
    expressed in the reduced coordinates.
    """

    V: np.ndarray
    xi: np.ndarray
    A: np.ndarray
    b: np.ndarray


class Polyhedron:
    """Constraint set ``{x : A x <= b}`` with a declared equality row set.

    Zero rows outside the equality set are dropped at construction (a zero
    row with negative right-hand side makes the set trivially empty and is
    rejected). Instances are immutable; the reduction is cached on first use.
    """

    def __init__(self, A, b, maximal_affine=()):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
        if A.shape[0] != b.shape[0]:
            raise ValueError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        if not np.isfinite(A).all() or not np.isfinite(b).all():
            raise ValueError("constraints must be finite")
        affine = np.zeros(A.shape[0], dtype=bool)
        affine[np.asarray(sorted(set(int(i) for i in maximal_affine)), dtype=int)] = True

        row_norms = np.abs(A).max(axis=1) if A.shape[1] else np.zeros(A.shape[0])
        zero = row_norms == 0.0
        bad = zero & ((b < 0.0) | (affine & (b != 0.0)))
        if bad.any():
            raise EmptyPolyhedronError(
                f"zero constraint row {int(np.flatnonzero(bad)[0])} cannot be satisfied"
            )
        keep = ~zero
        self._A = A[keep]
        self._b = b[keep]
        self._affine_mask = affine[keep]
        self._reduction: Reduction | None = None

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self._b

    @property
    def n_vars(self) -> int:
        return self._A.shape[1]

    @property
    def n_constraints(self) -> int:
        return self._A.shape[0]

    @property
    def maximal_affine(self) -> np.ndarray:
        """Sorted indices of rows holding with equality everywhere."""
        return np.flatnonzero(self._affine_mask)

    @property
    def inequality_rows(self) -> np.ndarray:
        """Sorted indices of the remaining (inequality) rows."""
        return np.flatnonzero(~self._affine_mask)

    def binding_report(
        self,
        x,
        binding_tol: float = DEFAULT_BINDING_TOL,
        feas_tol: float = DEFAULT_FEAS_TOL,
    ) -> BindingReport:
        """Slacks, binding rows, and feasibility of a point."""
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.n_vars:
            raise ValueError(f"point has length {x.shape[0]}, expected {self.n_vars}")
        slacks = self._b - self._A @ x
        binding = np.flatnonzero(np.abs(slacks) <= binding_tol)
        feasible = bool((slacks >= -feas_tol).all())
        return BindingReport(binding=binding, slacks=slacks, is_feasible=feasible)

    def dimension(self, rank_tol: float | None = None) -> int:
        """Degrees of freedom: number of variables minus equality-row rank."""
        S = self.maximal_affine
        if S.size == 0:
            return self.n_vars
        return self.n_vars - rank_factor(self._A[S], rank_tol).rank

    def reduce(self, rank_tol: float | None = None) -> Reduction:
        """Reduced representation on the affine part (cached).

        Raises EmptyPolyhedronError when the equality rows are inconsistent.
        """
        if self._reduction is not None:
            return self._reduction
        p = self.n_vars
        S = self.maximal_affine
        ineq = self.inequality_rows
        if S.size == 0:
            red = Reduction(np.eye(p), np.zeros(p), self._A[ineq], self._b[ineq])
        else:
            A_S = self._A[S]
            b_S = self._b[S]
            xi = solve_ls_equality(A_S, b_S)
            resid = A_S @ xi - b_S
            if np.linalg.norm(resid, np.inf) > 1e-8 * (1.0 + np.linalg.norm(b_S, np.inf)):
                raise EmptyPolyhedronError("equality rows A_S x = b_S have no solution")
            V = rank_factor(A_S, rank_tol).null_basis
            A_ineq = self._A[ineq]
            red = Reduction(V, xi, A_ineq @ V, self._b[ineq] - A_ineq @ xi)
        self._reduction = red
        return red

    def __repr__(self):
        return (
            f"Polyhedron(m={self.n_constraints}, p={self.n_vars}, "
            f"|affine|={int(self._affine_mask.sum())})"
        )


def make_orthant(p: int) -> Polyhedron:
    """Non-negativity region ``x >= 0``: rows ``-e_i``, zero right-hand side."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return Polyhedron(-np.eye(p), np.zeros(p))


def make_box(lower, upper) -> Polyhedron:
    """Box ``lower <= x <= upper``; infinite bounds contribute no row.

    Coordinates with equal (finite) bounds route both of their rows into the
    equality set, so the dimension of a degenerate box comes out right.
    """
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    up = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.shape != up.shape or lo.ndim != 1:
        raise ValueError("lower and upper must be 1-D of equal length")
    if (lo > up).any():
        i = int(np.flatnonzero(lo > up)[0])
        raise ValueError(f"lower[{i}] exceeds upper[{i}]")
    equal = lo == up
    if (equal & ~np.isfinite(lo)).any():
        raise ValueError("equal bounds must be finite")
    p = lo.shape[0]
    eye = np.eye(p)
    rows, rhs, affine = [], [], []
    for i in range(p):
        if np.isfinite(lo[i]):
            if equal[i]:
                affine.append(len(rows))
            rows.append(-eye[i])
            rhs.append(-lo[i])
    for i in range(p):
        if np.isfinite(up[i]):
            if equal[i]:
                affine.append(len(rows))
            rows.append(eye[i])
            rhs.append(up[i])
    if not rows:
        # Unbounded in every coordinate: an empty constraint system.
        return Polyhedron(np.zeros((0, p)), np.zeros(0))
    return Polyhedron(np.array(rows), np.array(rhs), affine)


def make_simplex(p: int, C: float, equality: bool) -> Polyhedron:
    """Scaled simplex ``x >= 0`` with ``sum(x) <= C`` (or ``= C``).

    The sum row is the last row; the equality variant declares it as an
    always-binding constraint.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if C < 0:
        raise ValueError("C must be non-negative")
    A = np.vstack([-np.eye(p), np.ones((1, p))])
    b = np.concatenate([np.zeros(p), [float(C)]])
    affine = [p] if equality else []
    return Polyhedron(A, b, affine)
