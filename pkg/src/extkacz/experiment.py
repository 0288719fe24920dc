"""Seeded multi-trial experiments with CSV outputs.

Every trial derives three independent generators (row partition, column
partition, solver draws) from ``SeedSequence(master_seed, spawn_key=(p,
trial))``. All methods in a trial share these streams, so comparisons
between methods are paired and the whole output is a function of the
experiment description alone.
"""

from __future__ import annotations

import configparser
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .linalg import LinearSystem, OracleSolution, min_norm_lsq_oracle
from .mmio import load_matrix_market, load_vector
from .problems import actual_convergence_factor, full_iterations, gen_consistent_rhs, gen_gaussian_udv, gen_inconsistent_rhs
from .sampling import make_partition, make_scheme
from .solvers import SolverConfig, run_solver, svrg_run
from .theory import DEFAULT_MAX_DIM, BoundsConfig, compute_rates, compute_reabk_rates

METRICS_HEADER = ("method", "p", "trial", "iterations", "full_iterations", "cpu_seconds", "rho_actual", "final_rse")
SUMMARY_METRICS = ("iterations", "full_iterations", "rho_actual", "final_rse")
ALPHA_PRESETS = {"gaussian": 1.75, "real": 1.0}


@dataclass(frozen=True)
class ProblemSpec:
    """Where ``A`` and ``b`` come from.

    ``source`` is ``"generated"`` (Gaussian ``U D V^T``) or ``"file"``;
    ``rhs`` is ``"inconsistent"``, ``"consistent"`` or ``"file"``.
    """

    source: str = "generated"
    m: int = 0
    n: int = 0
    r: int = 0
    kappa: float = 1.0
    seed: int = 0
    matrix_path: str | None = None
    rhs: str = "inconsistent"
    rhs_seed: int = 1
    rhs_path: str | None = None

    def __post_init__(self):
        if self.source not in ("generated", "file"):
            raise ValueError(f"unknown problem source {self.source!r}")
        if self.rhs not in ("inconsistent", "consistent", "file"):
            raise ValueError(f"unknown rhs kind {self.rhs!r}")
        if self.source == "generated":
            if not 1 <= self.r <= min(self.m, self.n):
                raise ValueError("generated problems need 1 <= r <= min(m, n)")
            if self.kappa < 1:
                raise ValueError("kappa must be at least 1")
        elif not self.matrix_path:
            raise ValueError("file problems need a matrix path")
        if self.rhs == "file" and not self.rhs_path:
            raise ValueError("rhs = file needs an rhs path")

    def build(self, oracle_cap: int = DEFAULT_MAX_DIM):
        """Return ``(system, oracle_or_None)``."""
        if self.source == "generated":
            A = gen_gaussian_udv(self.m, self.n, self.r, self.kappa, np.random.default_rng(self.seed))
        else:
            A = load_matrix_market(self.matrix_path)
        small = max(A.shape) <= oracle_cap
        rng = np.random.default_rng(self.rhs_seed)
        if self.rhs == "file":
            b = load_vector(self.rhs_path)
        elif self.rhs == "consistent":
            b = gen_consistent_rhs(A, rng)
        else:
            if not small:
                raise ValueError("inconsistent right-hand side generation needs the dense oracle")
            b = gen_inconsistent_rhs(A, rng, min_norm_lsq_oracle(LinearSystem(A, np.zeros(A.m))))
        system = LinearSystem(A, b)
        return system, (min_norm_lsq_oracle(system) if small else None)


@dataclass
class ExperimentSpec:
    problem: ProblemSpec
    methods: list[SolverConfig]
    block_sizes: list[int]
    trials: int = 20
    master_seed: int = 0
    rse_tol: float = 1e-12
    residual_tol: float = 0.0
    max_iters: int = 200_000
    outputs: str = "results"
    timing: bool = False
    trace_stride: int = 1
    alpha_preset: str = "gaussian"
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    oracle_cap: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.alpha_preset not in ALPHA_PRESETS:
            raise ValueError(f"alpha_preset must be one of {sorted(ALPHA_PRESETS)}")
        names = [c.method for c in self.methods]
        if len(set(names)) != len(names):
            raise ValueError("each method may appear only once")
        if any(c.method != "SVRG" for c in self.methods) and not self.block_sizes:
            raise ValueError("block methods need at least one block size")

    def validate_dims(self, m: int, n: int):
        bad = [p for p in self.block_sizes if not 1 <= p <= min(m, n)]
        if bad:
            raise ValueError(f"block sizes {bad} outside [1, min(m, n) = {min(m, n)}]")

    @classmethod
    def from_ini(cls, path) -> "ExperimentSpec":
        """Parse the ini-style description used by ``extkacz bench``."""
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        return cls.from_config(cp)

    @classmethod
    def from_config(cls, cp: configparser.ConfigParser) -> "ExperimentSpec":
        pr = cp["problem"]
        problem = ProblemSpec(
            source=pr.get("source", "generated"),
            m=pr.getint("m", 0),
            n=pr.getint("n", 0),
            r=pr.getint("r", 0),
            kappa=pr.getfloat("kappa", 1.0),
            seed=pr.getint("seed", 0),
            matrix_path=pr.get("matrix"),
            rhs=pr.get("rhs", "inconsistent"),
            rhs_seed=pr.getint("rhs_seed", 1),
            rhs_path=pr.get("rhs_file"),
        )
        ex = cp["experiment"]
        stop = dict(
            rse_tol=ex.getfloat("rse_tol", 1e-12),
            residual_tol=ex.getfloat("residual_tol", 0.0),
            max_iters=ex.getint("max_iters", 200_000),
        )
        methods = []
        for name in _split(ex.get("methods", "AREABK")):
            sec = cp[f"method.{name}"] if cp.has_section(f"method.{name}") else {}
            get = lambda key, conv: conv(sec[key]) if key in sec else None  # noqa: E731
            methods.append(
                SolverConfig(
                    method=name,
                    eta=get("eta", float) or 1.0,
                    zeta=get("zeta", float) or 1.0,
                    alpha_const=get("alpha", float),
                    svrg_alpha=get("alpha", float) if name.upper() == "SVRG" else None,
                    svrg_inner_N=get("inner_n", int),
                    **stop,
                )
            )
        bounds = BoundsConfig()
        if cp.has_section("bounds"):
            bs = cp["bounds"]
            bounds = BoundsConfig(bs.getfloat("eta", 1.0), bs.getfloat("zeta", 1.0), bs.getfloat("eps", 1.0))
        return cls(
            problem=problem,
            methods=methods,
            block_sizes=[int(v) for v in _split(ex.get("block_sizes", ""))],
            trials=ex.getint("trials", 20),
            master_seed=ex.getint("master_seed", 0),
            outputs=ex.get("out", "results"),
            timing=ex.getboolean("timing", False),
            trace_stride=ex.getint("trace_stride", 1),
            alpha_preset=ex.get("alpha_preset", "gaussian"),
            bounds=bounds,
            **stop,
        )


def _split(text: str) -> list[str]:
    return [tok for tok in text.replace(",", " ").split() if tok]


def trial_generators(master_seed: int, p: int, trial: int):
    """``(row_partition_rng, col_partition_rng, solver_rng)`` for one trial."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(p, trial))
    return tuple(np.random.default_rng(child) for child in ss.spawn(3))


def build_schemes(system: LinearSystem, p: int, row_rng, col_rng):
    rows = make_scheme(system.A, make_partition(system.m, p, row_rng), "row")
    cols = make_scheme(system.A, make_partition(system.n, p, col_rng), "column")
    return rows, cols


def reabk_alpha(system: LinearSystem, row_scheme, col_scheme, preset: str = "gaussian") -> float:
    """Preset constant step ``c / Gamma_max`` with ``c`` 1.75 (Gaussian) or 1 (real data)."""
    rates = compute_reabk_rates(system.A, row_scheme.partition, col_scheme.partition)
    return ALPHA_PRESETS[preset] / max(rates.Gamma_max_I, rates.Gamma_max_J)


@dataclass
class TrialResult:
    method: str
    p: int
    trial: int
    iterations: int
    full_iterations: float
    cpu_seconds: float
    rho_actual: float
    final_rse: float
    status: str
    trace_csv: str

    def metrics_line(self) -> str:
        vals = [self.method, str(self.p), str(self.trial), str(self.iterations)]
        vals += [repr(float(v)) for v in (self.full_iterations, self.cpu_seconds, self.rho_actual, self.final_rse)]
        return ",".join(vals)


def run_trial(
    system: LinearSystem,
    oracle: OracleSolution | None,
    cfg: SolverConfig,
    p: int,
    trial: int,
    master_seed: int,
    timing: bool = False,
    trace_stride: int = 1,
    alpha_preset: str = "gaussian",
) -> TrialResult:
    """Run one method on one trial's seeded partitions and draw stream."""
    row_rng, col_rng, solver_rng = trial_generators(master_seed, p, trial)
    cpu0 = time.process_time()
    if cfg.method == "SVRG":
        record = svrg_run(system, cfg, solver_rng, oracle=oracle)
        p_eff = cfg.svrg_inner_N or 2 * system.m
    else:
        rows, cols = build_schemes(system, p, row_rng, col_rng)
        if cfg.method == "REABK_CONST" and cfg.alpha_const is None:
            cfg = replace(cfg, alpha_const=reabk_alpha(system, rows, cols, alpha_preset))
        record = run_solver(system, rows, cols, cfg, oracle=oracle, rng=solver_rng)
        p_eff = p
    cpu = time.process_time() - cpu0 if timing else math.nan
    K = record.iterations
    rho = math.nan
    if K > 0 and not np.isnan(record.final_rse):
        rho = actual_convergence_factor(record, K)
    return TrialResult(
        method=cfg.method,
        p=p_eff,
        trial=trial,
        iterations=K,
        full_iterations=full_iterations(K, p_eff, system.m),
        cpu_seconds=cpu,
        rho_actual=rho,
        final_rse=record.final_rse,
        status=record.status,
        trace_csv=record.to_csv(trial=trial, timing=timing, stride=trace_stride),
    )


def _trial_task(args):
    return run_trial(*args)


def quantile_summary(values) -> tuple[float, float, float, float, float]:
    """``(median, q25, q75, min, max)`` with linear interpolation between order statistics."""
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return (math.nan,) * 5
    q = np.quantile(v, [0.5, 0.25, 0.75], method="linear")
    return float(q[0]), float(q[1]), float(q[2]), float(v.min()), float(v.max())


def run_experiment(spec: ExperimentSpec, out=None, jobs: int = 1) -> list[TrialResult]:
    """Run every (method, p, trial) combination and write the result files.

    Files written under ``out``: ``metrics.csv``, ``summary.csv``,
    ``traces/<method>_p<p>_t<trial>.csv``, ``bounds_p<p>.txt`` (when the
    dense theory is feasible) and ``meta.json``.
    """
    out = Path(out if out is not None else spec.outputs)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc

    system, oracle = spec.problem.build(spec.oracle_cap)
    spec.validate_dims(system.m, system.n)
    notes = []
    methods = [
        replace(c, rse_tol=spec.rse_tol, residual_tol=spec.residual_tol, max_iters=spec.max_iters) for c in spec.methods
    ]
    if oracle is None:
        if spec.residual_tol <= 0:
            raise ValueError("oracle infeasible for this problem size; RSE stopping needs residual_tol > 0")
        notes.append("oracle infeasible: stopping on the normal-equations residual only")
        methods = [replace(c, rse_tol=0.0) for c in methods]

    tasks = []
    for cfg in methods:
        sizes = [0] if cfg.method == "SVRG" else spec.block_sizes
        for p in sizes:
            for t in range(spec.trials):
                tasks.append(
                    (system, oracle, cfg, p, t, spec.master_seed, spec.timing, spec.trace_stride, spec.alpha_preset)
                )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_task, tasks))
    else:
        results = [_trial_task(t) for t in tasks]

    for r in results:
        (out / "traces" / f"{r.method}_p{r.p}_t{r.trial}.csv").write_text(r.trace_csv)
    lines = [",".join(METRICS_HEADER)] + [r.metrics_line() for r in results]
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    _write_summary(out / "summary.csv", results)

    block_methods = [c for c in spec.methods if c.method != "SVRG"]
    if block_methods and max(system.A.shape) <= spec.oracle_cap:
        for p in spec.block_sizes:
            row_rng, col_rng, _ = trial_generators(spec.master_seed, p, 0)
            rows, cols = build_schemes(system, p, row_rng, col_rng)
            tb = compute_rates(system.A, rows, cols, spec.bounds)
            (out / f"bounds_p{p}.txt").write_text(f"p={p}\n" + tb.to_report())
    else:
        notes.append("theory bounds skipped: dimensions above the dense cap")

    meta = {
        "problem": asdict(spec.problem),
        "m": system.m,
        "n": system.n,
        "master_seed": spec.master_seed,
        "trials": spec.trials,
        "block_sizes": list(spec.block_sizes),
        "methods": [asdict(c) for c in spec.methods],
        "stopping": {"rse_tol": spec.rse_tol, "residual_tol": spec.residual_tol, "max_iters": spec.max_iters},
        "timing": spec.timing,
        "notes": notes,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return results


def _write_summary(path: Path, results: list[TrialResult]):
    header = ["method", "p", "trials", "converged"]
    for metric in SUMMARY_METRICS:
        header += [f"{stat}_{metric}" for stat in ("median", "q25", "q75", "min", "max")]
    groups: dict[tuple[str, int], list[TrialResult]] = {}
    for r in results:
        groups.setdefault((r.method, r.p), []).append(r)
    lines = [",".join(header)]
    for (method, p), rs in groups.items():
        row = [method, str(p), str(len(rs)), str(sum(r.status.startswith("converged") for r in rs))]
        for metric in SUMMARY_METRICS:
            row += [repr(v) for v in quantile_summary([getattr(r, metric) for r in rs])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
