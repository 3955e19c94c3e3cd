"""Experiment harness: synthetic instance generators and benchmark runner.

Covers two studies at desk scale: non-negative least squares on sparse
uniform design matrices with a shifting response mean, and positive spike
deconvolution against a Gaussian kernel design built on a dense location
grid. Results are emitted as long-format CSV records.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import enumerate_faces, projected_gradient
from .linalg import DenseMatrix
from .solver import Bounds, SolverConfig, solve

POS_TOL_COEFF = 1e-9
BENCH_CSV_HEADER = "instance,solver,wall_time_s,objective,n_positive,kkt_passed"
KNOWN_SOLVERS = ("cd", "projected_gradient", "enumeration")


@dataclass(frozen=True)
class SimConfig:
    """Simulated NNLS study: sparse uniform X, normal response of mean mu.

    ``density`` is the probability an entry of X survives zeroing (0.2 keeps
    the canonical 80 percent of entries at zero). ``mu_grid`` defaults to 20
    equally spaced points spanning [-3, 3] (three standard deviations each
    way for the default ``sigma=1``).
    """

    n: int
    p: int
    density: float = 0.2
    mu_grid: np.ndarray = field(
        default_factory=lambda: np.linspace(-3.0, 3.0, 20)
    )
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(
            self, "mu_grid", np.atleast_1d(np.asarray(self.mu_grid, dtype=float))
        )


def default_mu_grid(sigma: float, points: int = 20) -> np.ndarray:
    """Equally spaced response means spanning three standard deviations."""
    return np.linspace(-3.0 * sigma, 3.0 * sigma, points)


def gen_sim_instance(cfg: SimConfig, mu: float):
    """Draw one (X, y) instance for the given response mean.

    Entries of X are Unif(0,1), independently zeroed with probability
    ``1 - density``; y is i.i.d. normal with mean ``mu``. The stream is
    seeded by ``(cfg.seed, index of mu in the grid)`` so every instance is
    reproducible on its own.
    """
    idx = int(np.argmin(np.abs(cfg.mu_grid - mu)))
    rng = np.random.default_rng([cfg.seed, idx])
    X = rng.uniform(size=(cfg.n, cfg.p))
    keep = rng.uniform(size=(cfg.n, cfg.p)) < cfg.density
    X = np.where(keep, X, 0.0)
    y = mu + cfg.sigma * rng.standard_normal(cfg.n)
    return DenseMatrix(X), y


@dataclass(frozen=True)
class SpikeConfig:
    """Design of a spike-deconvolution problem on observation times in [0,1].

    The kernel standard deviation is ``kernel_sd_multiplier`` times the
    median gap between consecutive observation times.
    """

    times: np.ndarray
    grid_size: int
    kernel_sd_multiplier: float = 2.0

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        if (np.diff(t) < 0).any():
            raise ValueError("times must be sorted ascending")
        if t.size and (t.min() < -1e-12 or t.max() > 1.0 + 1e-12):
            raise ValueError("times must lie in [0, 1]")
        if self.grid_size < 1:
            raise ValueError("grid_size must be at least 1")
        object.__setattr__(self, "times", t)


def build_spike_matrix(cfg: SpikeConfig):
    """Gaussian-kernel design matrix ``X[i, j] = phi(t_i - tau_j)``.

    Returns ``(X, tau, sd)`` with ``tau`` the equally spaced location grid
    on [0, 1] and ``sd`` the kernel standard deviation.
    """
    t = cfg.times
    if np.unique(t).size < 2:
        raise ValueError("need at least two distinct observation times")
    sd = cfg.kernel_sd_multiplier * float(np.median(np.diff(t)))
    if sd <= 0:
        raise ValueError("median time gap is zero; kernel width undefined")
    tau = np.linspace(0.0, 1.0, cfg.grid_size)
    diff = t[:, None] - tau[None, :]
    X = np.exp(-0.5 * (diff / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
    return DenseMatrix(X), tau, sd


def gen_spike_truth(n: int, k_spikes: int, noise_sd: float, seed: int,
                    p: int = 500, kernel_sd_multiplier: float = 2.0):
    """Synthetic spike train: observation times, noisy response, true support.

    Places ``k_spikes`` amplitudes drawn Unif(0.5, 2) at distinct random
    locations of the size-``p`` grid and evaluates the blurred signal on
    ``n`` equally spaced observation times.
    """
    if k_spikes > p:
        raise ValueError("k_spikes cannot exceed the grid size")
    if n < 2:
        raise ValueError("need at least two observation times")
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, n)
    X, _, _ = build_spike_matrix(SpikeConfig(times, p, kernel_sd_multiplier))
    support = np.sort(rng.choice(p, size=k_spikes, replace=False))
    beta = np.zeros(p)
    beta[support] = rng.uniform(0.5, 2.0, size=k_spikes)
    y = X.values @ beta + noise_sd * rng.standard_normal(n)
    return times, y, support


@dataclass(frozen=True)
class SpikeInstance:
    """One spike-deconvolution benchmark input: named observed series."""

    instance_id: str
    times: np.ndarray
    y: np.ndarray
    grid_size: int
    kernel_sd_multiplier: float = 2.0


@dataclass(frozen=True)
class BenchRecord:
    instance: str
    solver: str
    wall_time_s: float
    objective: float
    n_positive: int
    kkt_passed: bool


def positive_count(beta, coeff: float = POS_TOL_COEFF) -> int:
    """Entries above ``coeff * max|beta|`` (zero for an all-zero vector)."""
    beta = np.asarray(beta, dtype=float)
    scale = np.abs(beta).max(initial=0.0)
    return int(np.count_nonzero(beta > coeff * scale)) if scale > 0 else 0


def _run_one(name: str, X: DenseMatrix, y: np.ndarray, bounds: Bounds,
             config: SolverConfig, measure_time: bool):
    start = time.perf_counter()
    if name == "cd":
        res = solve(X, y, bounds, config)
        beta, obj, ok = res.beta, res.objective, res.kkt_passed
    elif name == "projected_gradient":
        res = projected_gradient(X, y, bounds)
        beta, obj, ok = res.beta, res.objective, res.converged
    elif name == "enumeration":
        res = enumerate_faces(X, y, bounds)
        beta, obj, ok = res.beta, res.objective, True
    else:
        raise ValueError(f"unknown solver {name!r}")
    elapsed = time.perf_counter() - start if measure_time else 0.0
    return beta, obj, ok, elapsed


def run_benchmark(suite: str, configs, solvers, config: SolverConfig | None = None,
                  n_threads: int | None = None,
                  measure_time: bool = True) -> list[BenchRecord]:
    """Run each requested solver on every instance of a suite.

    ``suite`` is ``"sim"`` (configs are SimConfig; one instance per grid
    mean) or ``"spike"`` (configs are SpikeInstance). Instances may run on a
    thread pool, but records are returned in deterministic instance order.
    """
    solvers = list(solvers)
    unknown = [s for s in solvers if s not in KNOWN_SOLVERS]
    if unknown:
        raise ValueError(f"unknown solvers: {unknown}")
    cfg = config if config is not None else SolverConfig()

    instances = []
    if suite == "sim":
        for sim in configs:
            if "enumeration" in solvers and sim.p > 12:
                raise ValueError("enumeration oracle requires p <= 12")
            for mu in sim.mu_grid:
                X, y = gen_sim_instance(sim, mu)
                inst_id = f"sim:n={sim.n}:p={sim.p}:mu={mu:.6g}:seed={sim.seed}"
                instances.append((inst_id, X, y, Bounds.nonneg(sim.p)))
    elif suite == "spike":
        for spike in configs:
            if "enumeration" in solvers and spike.grid_size > 12:
                raise ValueError("enumeration oracle requires p <= 12")
            X, _, _ = build_spike_matrix(
                SpikeConfig(spike.times, spike.grid_size, spike.kernel_sd_multiplier)
            )
            instances.append(
                (spike.instance_id, X, spike.y, Bounds.nonneg(spike.grid_size))
            )
    else:
        raise ValueError(f"unknown suite {suite!r}")

    def run_instance(item):
        inst_id, X, y, bounds = item
        recs = []
        for name in solvers:
            beta, obj, ok, elapsed = _run_one(name, X, y, bounds, cfg, measure_time)
            recs.append(
                BenchRecord(inst_id, name, elapsed, obj, positive_count(beta), ok)
            )
        return recs

    if n_threads is not None and n_threads > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            grouped = list(pool.map(run_instance, instances))
    else:
        grouped = [run_instance(item) for item in instances]
    return [rec for group in grouped for rec in group]


def records_to_csv(records) -> str:
    """Serialize benchmark records to long-format CSV (stable byte output)."""
    buf = io.StringIO()
    buf.write(BENCH_CSV_HEADER + "\n")
    for rec in records:
        buf.write(
            f"{rec.instance},{rec.solver},{rec.wall_time_s!r},"
            f"{rec.objective!r},{rec.n_positive},"
            f"{'true' if rec.kkt_passed else 'false'}\n"
        )
    return buf.getvalue()


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def load_spike_csv(path):
    """Read a ``time,value`` series; returns times normalized to [0,1] and values.

    A header row is required; rows with an empty value field are skipped.
    Raises ValueError naming the offending row on malformed input.
    """
    times, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError("spike CSV needs a 'time,value' header row")
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValueError(f"row {rownum}: expected 2 columns, got {len(row)}")
            if not row[1].strip():
                continue
            try:
                t = float(row[0])
            except ValueError:
                raise ValueError(f"row {rownum}, column 1: not a number: {row[0]!r}")
            try:
                v = float(row[1])
            except ValueError:
                raise ValueError(f"row {rownum}, column 2: not a number: {row[1]!r}")
            times.append(t)
            values.append(v)
    if len(times) < 2:
        raise ValueError("spike CSV must contain at least two valued rows")
    t = np.asarray(times)
    v = np.asarray(values)
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("observation times are all identical")
    return (t - t[0]) / span, v
