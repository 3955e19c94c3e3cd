"""Polyhedron-constrained least squares toolkit.

A screened coordinate-descent solver for box-constrained and non-negative
least squares, polyhedron machinery with affine-part reduction, constructive
sparsifiers that rewrite feasible representations to bind many constraints,
independent reference solvers, and a benchmark harness.
"""

from .baselines import OracleResult, enumerate_faces, projected_gradient
from .harness import (
    BenchRecord,
    SimConfig,
    SpikeConfig,
    SpikeInstance,
    build_spike_matrix,
    gen_sim_instance,
    gen_spike_truth,
    load_spike_csv,
    positive_count,
    run_benchmark,
    write_records_csv,
)
from .linalg import (
    DenseMatrix,
    RankFactorization,
    as_dense,
    default_rank_tol,
    rank_factor,
    solve_ls_equality,
)
from .polyhedron import (
    BindingReport,
    EmptyPolyhedronError,
    Polyhedron,
    Reduction,
    make_box,
    make_orthant,
    make_simplex,
)
from .solver import (
    Bounds,
    SolveResult,
    SolverConfig,
    coord_update,
    gradient,
    init_beta,
    kkt_check,
    solve,
    solve_nnls,
    violations,
)
from .sparsify import (
    NoIntersectionError,
    SparsifyResult,
    ToleranceSet,
    caratheodory_reduce,
    null_step,
    reduce_isls_excess,
    sparsify,
    verify_local_uniqueness,
)

__version__ = "0.1.0"

__all__ = [
    "BenchRecord",
    "BindingReport",
    "Bounds",
    "DenseMatrix",
    "EmptyPolyhedronError",
    "NoIntersectionError",
    "OracleResult",
    "Polyhedron",
    "RankFactorization",
    "Reduction",
    "SimConfig",
    "SolveResult",
    "SolverConfig",
    "SparsifyResult",
    "SpikeConfig",
    "SpikeInstance",
    "ToleranceSet",
    "as_dense",
    "build_spike_matrix",
    "caratheodory_reduce",
    "coord_update",
    "default_rank_tol",
    "enumerate_faces",
    "gen_sim_instance",
    "gen_spike_truth",
    "gradient",
    "init_beta",
    "kkt_check",
    "load_spike_csv",
    "make_box",
    "make_orthant",
    "make_simplex",
    "null_step",
    "positive_count",
    "projected_gradient",
    "rank_factor",
    "reduce_isls_excess",
    "run_benchmark",
    "solve",
    "solve_ls_equality",
    "solve_nnls",
    "sparsify",
    "verify_local_uniqueness",
    "violations",
    "write_records_csv",
]
