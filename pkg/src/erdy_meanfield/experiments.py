"""Seeded convergence studies over a ladder of graph sizes.

Every row is a pure function of ``(config, n, replication)``: the row seed
comes from :func:`derive_seed` and is split into independent graph, initial
condition, simulation and sampling seeds. Rows may run in worker processes;
results are sorted before aggregation, so output does not depend on the
worker count.
"""

from __future__ import annotations

import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .approximations import solve_meanfield, solve_nimfa
from .errors import GridMismatchError, InvalidInputError
from .graph import GraphParams, WeightDistribution, check_assumptions, r1, r2, sample_graph
from .models import model_from_spec
from .simulation import gronwall_slack, initial_state, reconstruct_k, simulate, sup_h

__all__ = [
    "StudyConfig",
    "StudyResult",
    "LoglogFit",
    "ROW_FIELDS",
    "METRICS",
    "sup_error",
    "fit_loglog",
    "fit_loglog_slope",
    "derive_seed",
    "run_row",
    "run_convergence_study",
]

ROW_FIELDS = (
    "n", "seed", "status", "sup_err_x", "sup_err_y", "r1", "r2", "r2_mode",
    "sup_k", "sup_h", "gronwall_slack", "lm_ratio", "wall_ms",
)
METRICS = ("sup_err_x", "sup_err_y", "r1", "r2", "sup_k", "sup_h", "gronwall_slack", "lm_ratio")
SLOPE_METRICS = ("sup_err_x", "sup_err_y", "r1", "r2", "sup_k", "sup_h")


def sup_error(a, b, grid_a=None, grid_b=None):
    """``max_t |a(t) - b(t)|_1`` over a shared grid."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if grid_a is not None or grid_b is not None:
        if grid_a is None or grid_b is None or not np.array_equal(grid_a, grid_b):
            raise GridMismatchError("paths are sampled on different grids")
    if a.shape != b.shape:
        raise GridMismatchError(f"path shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 1:
        a, b = a[None, :], b[None, :]
    return float(np.abs(a - b).sum(axis=-1).max())


@dataclass(frozen=True)
class LoglogFit:
    slope: float
    intercept: float
    r2: float


def fit_loglog(points):
    """Least squares of ``log value`` on ``log N``."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise ValueError("log-log fit needs positive N and values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise ValueError("all N are equal")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(((y - ym) ** 2).sum())
    ss_res = float(((y - intercept - slope * x) ** 2).sum())
    fit_r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LoglogFit(slope, intercept, fit_r2)


def fit_loglog_slope(points):
    return fit_loglog(points).slope


def derive_seed(master, n, replication):
    """64-bit row seed: the first word of NumPy's ``SeedSequence`` hash of
    ``(master, n, replication)``."""
    ss = np.random.SeedSequence([int(master), int(n), int(replication)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class StudyConfig:
    model: dict
    ladder: list
    edge_prob: float = 0.1
    p_rule: dict | None = None
    weights: dict = field(default_factory=lambda: {"type": "constant", "parameters": {"value": 1.0}})
    horizon: float = 5.0
    u0: list = field(default_factory=lambda: [0.8, 0.2])
    init_mode: str = "deterministic"
    master_seed: int = 0
    replications: int = 1
    sample_points: int = 200
    diagnostics: dict = field(default_factory=dict)
    M: float = 4.0
    r2_cap: int = 2000
    r2_pairs: int = 10_000

    DEFAULT_DIAGNOSTICS = {
        "r1": True, "r2": "auto", "k": True, "h": True, "gronwall": True, "nimfa": True,
    }

    def __post_init__(self):
        if not self.ladder:
            raise InvalidInputError("ladder must be nonempty")
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        self.diagnostics = {**self.DEFAULT_DIAGNOSTICS, **self.diagnostics}

    def edge_prob_for(self, n):
        if self.p_rule is None:
            return self.edge_prob
        return min(1.0, self.p_rule.get("scale", 1.0) * n ** -self.p_rule["alpha"])

    @property
    def grid(self):
        return np.linspace(0.0, self.horizon, self.sample_points)

    @classmethod
    def from_run_config(cls, cfg):
        """Build from a validated run-config document."""
        graph = cfg.get("graph", {})
        dyn = cfg["dynamics"]
        study = cfg["study"]
        return cls(
            model=cfg["model"],
            ladder=list(study["ladder"]),
            edge_prob=graph.get("p", 0.1),
            p_rule=study.get("p_rule"),
            weights=graph.get("weights", {"type": "constant", "parameters": {"value": 1.0}}),
            horizon=dyn["horizon"],
            u0=list(dyn["u0"]),
            init_mode=dyn.get("init_mode", "deterministic"),
            master_seed=study.get("master_seed", 0),
            replications=study.get("replications", 1),
            sample_points=dyn.get("sample_points", 200),
            diagnostics=study.get("diagnostics", {}),
            M=study.get("M", cfg["model"].get("M", 4.0)),
            r2_cap=study.get("r2_cap", 2000),
            r2_pairs=study.get("r2_pairs", 10_000),
        )

    def to_dict(self):
        return asdict(self)


@dataclass
class StudyResult:
    rows: list
    aggregates: list
    slopes: dict
    config: StudyConfig

    def metric(self, name, n=None, stat="mean"):
        for a in self.aggregates:
            if a["metric"] == name and (n is None or a["n"] == n):
                return a[stat]
        raise KeyError((name, n))

    def series(self, name, stat="mean"):
        """``[(n, stat)]`` along the ladder for one metric."""
        return [(a["n"], a[stat]) for a in self.aggregates if a["metric"] == name]


def _empty_row(n, seed):
    row = dict.fromkeys(ROW_FIELDS, math.nan)
    row.update(n=n, seed=seed, status="ok", r2_mode="off")
    return row


def run_row(config, n, replication, mf_u=None):
    """Compute one study row. Failures are captured in ``status``."""
    if isinstance(config, dict):
        config = StudyConfig(**config)
    seed = derive_seed(config.master_seed, n, replication)
    row = _empty_row(n, seed)
    row["replication"] = replication
    started = time.perf_counter()
    try:
        _fill_row(row, config, n, seed, mf_u)
    except Exception as exc:  # noqa: BLE001 - per-row isolation
        row["status"] = "error: " + f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        row["_traceback"] = traceback.format_exc()
    row["wall_ms"] = (time.perf_counter() - started) * 1e3
    return row


def _fill_row(row, config, n, seed, mf_u):
    diag = config.diagnostics
    model = model_from_spec(config.model, M=config.M)
    grid = config.grid
    if mf_u is None:
        mf_u = solve_meanfield(model, config.u0, config.horizon, t_eval=grid).u
    graph_seed, init_seed, sim_seed, r2_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(4, np.uint64)
    )
    params = GraphParams(
        n=n,
        edge_prob=config.edge_prob_for(n),
        weights=WeightDistribution.from_dict(config.weights),
        seed=graph_seed,
    )
    graph = sample_graph(params)
    xi0 = initial_state(config.u0, n, config.init_mode, init_seed)
    want_h = diag["h"] or diag["gronwall"]
    traj = simulate(graph, model, xi0, config.horizon, seed=sim_seed, grid=grid, record_h=want_h)
    row["sup_err_x"] = sup_error(traj.x, mf_u)
    row["lm_ratio"] = check_assumptions(graph, model, config.M).lm_ratio

    if diag["nimfa"]:
        z0 = np.eye(model.state_count)[xi0]
        nimfa = solve_nimfa(graph, model, z0, config.horizon, t_eval=grid, store_z=False)
        row["sup_err_y"] = sup_error(nimfa.y, mf_u)
    if diag["r1"]:
        row["r1"] = r1(graph)
    mode = diag["r2"]
    if mode == "auto":
        mode = "exact" if n <= config.r2_cap else "sampled"
    if mode != "off":
        row["r2"], _ = r2(graph, mode=mode, pair_count=config.r2_pairs, seed=r2_seed, cap=config.r2_cap)
        row["r2_mode"] = mode
    kpath = reconstruct_k(traj.log) if (diag["k"] or diag["gronwall"]) else None
    if diag["k"]:
        row["sup_k"] = kpath.sup_norm
    if want_h:
        h = sup_h(traj.log)
        if diag["h"]:
            row["sup_h"] = h
        if diag["gronwall"]:
            try:
                lf = model.lipschitz.drift
            except (AttributeError, NotImplementedError):
                lf = None
            if lf is not None:
                row["gronwall_slack"] = gronwall_slack(traj, mf_u, kpath, h, lf, config.horizon)


def _aggregate(rows, config):
    out = []
    for n in sorted(set(config.ladder)):
        for metric in METRICS:
            vals = np.array(
                [r[metric] for r in rows if r["n"] == n and r["status"] == "ok"], dtype=np.float64
            )
            vals = vals[np.isfinite(vals)]
            if len(vals) == 0:
                mean = median = se = math.nan
            else:
                mean = float(vals.mean())
                median = float(np.median(vals))
                se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            out.append({"n": n, "metric": metric, "mean": mean, "median": median, "stderr": se})
    return out


def _slopes(aggregates):
    slopes = {}
    for metric in SLOPE_METRICS:
        pts = [(a["n"], a["mean"]) for a in aggregates if a["metric"] == metric]
        if len(pts) >= 2 and all(math.isfinite(v) and v > 0 for _, v in pts):
            slopes[metric] = fit_loglog(pts)
    return slopes


def run_convergence_study(config, workers=1, on_row=None):
    """Run every ``(n, replication)`` row of a study.

    The mean-field solution is computed once and shared by all rows.
    ``on_row`` (if given) is called with each finished row as it arrives.
    """
    if isinstance(config, dict):
        config = StudyConfig(**config)
    model = model_from_spec(config.model, M=config.M)
    mf_u = solve_meanfield(model, config.u0, config.horizon, t_eval=config.grid).u
    tasks = [(n, rep) for n in config.ladder for rep in range(config.replications)]
    rows = []
    if workers <= 1:
        for n, rep in tasks:
            row = run_row(config, n, rep, mf_u)
            rows.append(row)
            if on_row:
                on_row(row)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_row, config.to_dict(), n, rep, mf_u) for n, rep in tasks]
            for fut in futures:
                row = fut.result()
                rows.append(row)
                if on_row:
                    on_row(row)
    order = {task: i for i, task in enumerate(tasks)}
    rows.sort(key=lambda r: order[r["n"], r["replication"]])
    aggregates = _aggregate(rows, config)
    return StudyResult(rows=rows, aggregates=aggregates, slopes=_slopes(aggregates), config=config)
