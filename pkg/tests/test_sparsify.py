import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyls.linalg import rank_factor, solve_ls_equality
from polyls.polyhedron import make_box, make_orthant, make_simplex
from polyls.solver import SolverConfig, solve_nnls
from polyls.sparsify import (
    NoIntersectionError,
    ToleranceSet,
    caratheodory_reduce,
    null_step,
    reduce_isls_excess,
    sparsify,
    verify_local_uniqueness,
)


def support_size(w, tol=1e-9):
    w = np.asarray(w)
    return int(np.count_nonzero(w > tol * max(1.0, np.abs(w).max(initial=0.0))))


class TestNullStep:
    def test_orthant_walk(self):
        # t_1 = -0.5 and t_2 = +0.5 tie in magnitude; positive step wins
        t, hit = null_step(-np.eye(2), np.zeros(2), [0.5, 0.5], [1.0, -1.0])
        assert t == pytest.approx(0.5)
        assert hit == 1

    def test_orthogonal_direction_has_no_intersection(self):
        with pytest.raises(NoIntersectionError):
            null_step(np.array([[1.0, 0.0]]), [1.0], [0.0, 0.0], [0.0, 1.0])

    def test_single_constraint(self):
        t, hit = null_step(np.array([[1.0, 0.0]]), [1.0], [0.0, 0.0], [1.0, 0.0])
        assert t == pytest.approx(1.0)
        assert hit == 0

    def test_nearest_hyperplane_wins(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.array([1.0, 3.0])
        t, hit = null_step(A, b, [0.0, 0.0], [1.0, 1.0])
        assert (t, hit) == (pytest.approx(1.0), 0)


class TestSparsify:
    def test_two_column_orthant_example(self):
        res = sparsify(np.array([[1.0, 1.0]]), make_orthant(2), [0.5, 0.5])
        np.testing.assert_allclose(res.w, [1.0, 0.0], atol=1e-12)
        np.testing.assert_array_equal(res.binding, [1])
        assert res.steps_taken == 1
        assert res.guarantee == 1
        assert res.binding.size >= res.guarantee

    def test_full_column_rank_is_noop(self):
        rng = np.random.default_rng(0)
        Q = rng.standard_normal((5, 3))
        w0 = rng.uniform(0.5, 1.0, 3)
        res = sparsify(Q, make_orthant(3), w0)
        np.testing.assert_allclose(res.w, w0, atol=1e-12)
        assert res.steps_taken == 0

    def test_solver_output_reduced_to_rank(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(20, 60)) * (rng.uniform(size=(20, 60)) < 0.5)
        y = rng.standard_normal(20) + 1.0
        fit = solve_nnls(X, y, SolverConfig(cd_tol=1e-16))
        res = sparsify(X, make_orthant(60), fit.beta)
        rank = rank_factor(X).rank
        assert support_size(res.w) <= rank
        r_after = y - X @ res.w
        assert abs(0.5 * float(r_after @ r_after) - fit.objective) <= 1e-10 * (
            1.0 + fit.objective
        )

    def test_infeasible_start_rejected(self):
        with pytest.raises(ValueError):
            sparsify(np.eye(2), make_orthant(2), [-0.5, 1.0])

    def test_degenerate_box_returns_fixed_point(self):
        res = sparsify(np.array([[1.0]]), make_box([2.0], [2.0]), [2.0])
        np.testing.assert_allclose(res.w, [2.0], atol=1e-12)
        assert res.steps_taken == 0

    def test_binding_rows_full_rank(self):
        rng = np.random.default_rng(2)
        Q = rng.standard_normal((3, 12))
        w0 = rng.uniform(0.1, 1.0, 12)
        res = sparsify(Q, make_orthant(12), w0)
        assert res.binding_rank == res.binding.size

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_invariants_random_orthant(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        p = int(rng.integers(n + 1, 14))
        Q = rng.standard_normal((n, p))
        w0 = rng.uniform(0.0, 2.0, p)
        P = make_orthant(p)
        res = sparsify(Q, P, w0)
        x = Q @ w0
        # exact reconstruction
        assert res.reconstruction_error <= 1e-8 * (1.0 + np.linalg.norm(x))
        # feasibility of the result
        assert P.binding_report(res.w, feas_tol=1e-8).is_feasible
        # walking is bounded by the dimension
        assert res.steps_taken <= P.dimension()
        # certified guarantee is met
        if res.certified:
            assert res.binding.size >= res.guarantee
        # binding rows always form a full-row-rank block
        assert res.binding_rank == res.binding.size

    def test_binding_count_never_decreases(self):
        rng = np.random.default_rng(3)
        Q = rng.standard_normal((2, 8))
        w0 = rng.uniform(0.1, 1.0, 8)
        P = make_orthant(8)
        before = P.binding_report(w0).binding.size
        res = sparsify(Q, P, w0)
        assert res.binding.size >= before


class TestReduceIslsExcess:
    def test_two_equal_columns(self):
        X = np.array([[1.0, 1.0]])
        out = reduce_isls_excess(X, np.array([0.3, 0.3]), C=1.0)
        assert support_size(out) == 1
        assert out.sum() <= 1.0 + 1e-12
        assert X @ out == pytest.approx(0.6)

    def test_support_at_rank_unchanged(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        beta = np.array([0.2, 0.3])
        np.testing.assert_array_equal(reduce_isls_excess(X, beta, 1.0), beta)

    def test_balanced_null_vector_terminates(self):
        # kernel direction sums to zero; a coordinate still reaches zero
        X = np.array([[1.0, 1.0], [1.0, 1.0]])
        out = reduce_isls_excess(X, np.array([0.25, 0.25]), C=1.0)
        assert support_size(out) == 1
        np.testing.assert_allclose(X @ out, [0.5, 0.5], atol=1e-12)

    def test_budget_violation_rejected(self):
        with pytest.raises(ValueError):
            reduce_isls_excess(np.eye(2), np.array([2.0, 2.0]), C=1.0)

    def test_fit_preserved_random(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((3, 9))
        beta = rng.uniform(0.05, 0.2, 9)
        C = beta.sum() + 0.5
        out = reduce_isls_excess(X, beta, C)
        assert support_size(out) <= rank_factor(X).rank
        assert out.sum() <= C + 1e-12
        np.testing.assert_allclose(X @ out, X @ beta, atol=1e-10)


class TestCaratheodory:
    def test_centroid_of_four_points(self):
        Q = np.array([[0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
        w = np.full(4, 0.25)
        res = caratheodory_reduce(Q, w)
        assert support_size(res.w) <= 3
        np.testing.assert_allclose(Q @ res.w, Q @ w, atol=1e-12)
        assert abs(res.w.sum() - 1.0) <= 1e-12

    def test_already_sparse_stays_within_bound(self):
        Q = np.array([[1.0, 2.0, 3.0]])
        w = np.array([0.5, 0.5, 0.0])
        res = caratheodory_reduce(Q, w)
        assert support_size(res.w) <= 2

    def test_conical_five_rays(self):
        rng = np.random.default_rng(5)
        Q = rng.standard_normal((3, 5))
        w = rng.uniform(0.2, 1.5, 5)
        res = caratheodory_reduce(Q, w, conical=True)
        assert support_size(res.w) <= 3
        np.testing.assert_allclose(Q @ res.w, Q @ w, atol=1e-10)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            caratheodory_reduce(np.eye(2), [-0.5, 1.5])

    def test_convex_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            caratheodory_reduce(np.eye(2), [0.5, 0.4])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.booleans())
    def test_support_bounds_random(self, seed, conical):
        rng = np.random.default_rng(seed)
        n = int(rng.choice([2, 3, 5]))
        p = int(rng.integers(n + 2, 20))
        Q = rng.standard_normal((n, p))
        if conical:
            w = rng.uniform(0.1, 2.0, p)
        else:
            w = rng.dirichlet(np.ones(p))
        res = caratheodory_reduce(Q, w, conical=conical)
        bound = rank_factor(Q).rank + (0 if conical else 1)
        assert support_size(res.w) <= bound
        x = Q @ w
        assert np.linalg.norm(Q @ res.w - x) <= 1e-10 * (1.0 + np.linalg.norm(x))


class TestLocalUniqueness:
    def test_invertible_q_with_empty_binding(self):
        Q = np.eye(2)
        P = make_orthant(2)
        res = sparsify(Q, P, [0.5, 1.0])
        assert res.binding.size == 0
        assert verify_local_uniqueness(Q, P, res)

    def test_two_column_stack(self):
        # stacked rows [[1,1],[0,-1]] have determinant -1: unique
        Q = np.array([[1.0, 1.0]])
        P = make_orthant(2)
        res = sparsify(Q, P, [0.5, 0.5])
        assert verify_local_uniqueness(Q, P, res)

    def test_zero_matrix_not_unique(self):
        Q = np.zeros((2, 3))
        P = make_orthant(3)
        res = sparsify(Q, P, [1.0, 1.0, 1.0])
        # every weight walks to zero: binding rows alone have rank p
        # so force a rank-deficient situation with a looser polyhedron
        half = make_box([0.0, 0.0, 0.0], [np.inf, np.inf, np.inf])
        assert res.binding.size == 3
        from polyls.sparsify import SparsifyResult

        fake = SparsifyResult(
            w=np.zeros(3),
            binding=np.array([0]),
            binding_rank=1,
            guarantee=0,
            reconstruction_error=0.0,
            steps_taken=0,
            certified=True,
        )
        assert not verify_local_uniqueness(Q, half, fake)

    def test_resolving_stacked_system_reproduces_w(self):
        rng = np.random.default_rng(6)
        Q = rng.standard_normal((3, 9))
        w0 = rng.dirichlet(np.ones(9))
        P = make_simplex(9, 1.0, equality=True)
        res = sparsify(Q, P, w0)
        assert res.certified
        assert verify_local_uniqueness(Q, P, res)
        S = P.maximal_affine
        ineq = P.inequality_rows
        M = np.vstack([Q, P.A[S], P.A[ineq][res.binding]])
        rhs = np.concatenate([Q @ w0, P.b[S], P.b[ineq][res.binding]])
        w_hat = solve_ls_equality(M, rhs)
        assert np.linalg.norm(w_hat - res.w) <= 1e-8
