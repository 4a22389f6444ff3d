"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Set ``ERDY_ACCEPTANCE_TIER=ci`` to run criterion 8 on the reduced ladder.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from erdy_meanfield import (
    SIR,
    SIS,
    GraphParams,
    QuadraticSIS,
    StudyConfig,
    Voter,
    WeightDistribution,
    WeightedGraph,
    covariance_c,
    fit_loglog_slope,
    initial_state,
    net_jump_counts,
    r1,
    r2,
    reconstruct_k,
    run_convergence_study,
    sample_graph,
    simplex_violation,
    simulate,
    solve_meanfield,
    solve_nimfa,
)
from erdy_meanfield.cli import main as cli_main
from erdy_meanfield.config import load_config
from oracles import transient_distribution

CONFIGS = Path(__file__).parent.parent / "configs"


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_meanfield_logistic():
    start = time.perf_counter()
    t = np.linspace(0, 5, 1001)
    sol = solve_meanfield(SIS(2, 1), [0.9, 0.1], 5.0, t_eval=t)
    err = float(np.abs(sol.u[:, 1] - 0.5 / (1 + 4 * np.exp(-t))).max())
    elapsed = time.perf_counter() - start
    report(1, "mean-field vs logistic", err <= 1e-6 and elapsed < 1.0, f"sup err {err:.2e}, {elapsed:.2f} s")


def test_criterion_02_nimfa_complete_graph():
    start = time.perf_counter()
    g = sample_graph(GraphParams(200, 1.0, WeightDistribution.constant(1.0), seed=0))
    grid = np.linspace(0, 5, 201)
    u = solve_meanfield(SIS(2, 1), [0.9, 0.1], 5.0, t_eval=grid).u
    y = solve_nimfa(g, SIS(2, 1), [0.9, 0.1], 5.0, t_eval=grid, store_z=False).y
    err = float(np.abs(y - u).sum(axis=1).max())
    elapsed = time.perf_counter() - start
    report(2, "NIMFA equals mean-field on K_200", err <= 1e-8 and elapsed < 10, f"max l1 {err:.2e}, {elapsed:.1f} s")


def test_criterion_03_simplex_invariance():
    models = [SIS(2, 1), SIR(3, 1), Voter(1.5), QuadraticSIS(2, 1)]
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(50):
        model = models[k % len(models)]
        n = int(rng.integers(2, 101))
        p = float(rng.uniform(0.05, 1.0))
        weights = [WeightDistribution.constant(1.0), WeightDistribution.exponential(1.0),
                   WeightDistribution.uniform(0.2, 2.0)][k % 3]
        g = sample_graph(GraphParams(n, p, weights, seed=k))
        z0 = rng.dirichlet(np.ones(model.state_count), n)
        sol = solve_nimfa(g, model, z0, 5.0, n_points=101, simplex_tol=None)
        worst = max(worst, simplex_violation(sol.z))
    report(3, "NIMFA simplex invariance (50 instances)", worst <= 1e-9, f"worst violation {worst:.2e}")


def test_criterion_04_simulator_oracles():
    start = time.perf_counter()
    reps = 100_000
    lone = WeightedGraph.from_edges(1, [])
    alive = sum(
        int(simulate(lone, SIS(2, 1), [1], 1.0, seed=s, grid=[0.0, 1.0], record_h=False).counts[-1, 1])
        for s in range(reps)
    )
    survival = alive / reps
    g3 = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)], mean_degree=1.5)
    model = SIS(2, 1)
    xi0 = np.array([1, 0, 0])
    configs, exact = transient_distribution(g3, model, xi0, 1.0)
    index = {c: k for k, c in enumerate(configs)}
    hist = np.zeros(len(configs))
    for s in range(reps):
        tr = simulate(g3, model, xi0, 1.0, seed=10**6 + s, grid=[0.0, 1.0], record_h=False)
        hist[index[tuple(tr.log.replay())]] += 1
    tv = 0.5 * float(np.abs(hist / reps - exact).sum())
    elapsed = time.perf_counter() - start
    ok = abs(survival - math.exp(-1)) <= 0.004 and tv <= 0.02 and elapsed < 120
    report(4, "exact simulator oracles", ok, f"P(I at 1)={survival:.4f}, TV={tv:.4f}, {elapsed:.0f} s")


def _sis_runs(count):
    model = SIS(2, 1)
    for seed in range(count):
        g = sample_graph(GraphParams(500, 0.2, seed=seed))
        xi0 = initial_state([0.8, 0.2], 500, seed=seed)
        yield g, model, xi0, simulate(g, model, xi0, 3.0, seed=seed, sample_points=301)


def test_criterion_05_counting_identity_and_martingale():
    start = time.perf_counter()
    identity_ok = True
    finals = []
    for g, model, xi0, traj in _sis_runs(200):
        log = traj.log
        net = net_jump_counts(log)
        base = np.bincount(xi0, minlength=2)
        after = np.vstack([base, base + net])
        replayed = np.bincount(log.replay(), minlength=2)
        identity_ok &= bool(np.array_equal(after[-1], replayed))
        # x_s(t) - x_s(0) = net counts / N at every grid time
        m = np.searchsorted(log.times, traj.times, side="right")
        identity_ok &= bool(np.array_equal(traj.counts, after[m]))
        finals.append(reconstruct_k(log).channels_final)
    finals = np.array(finals)
    mean = finals.mean(axis=0)
    se = finals.std(axis=0, ddof=1) / math.sqrt(len(finals))
    zs = [abs(mean[k, s]) / se[k, s] for k, s in [(1, 0), (0, 1)]]
    elapsed = time.perf_counter() - start
    ok = identity_ok and max(zs) <= 3 and elapsed < 300
    report(5, "counting identity and K martingale", ok,
           f"identity {'exact' if identity_ok else 'BROKEN'}, |mean K|/se = {zs[0]:.2f}, {zs[1]:.2f}, {elapsed:.0f} s")


def test_criterion_06_gronwall():
    from erdy_meanfield import gronwall_slack

    start = time.perf_counter()
    slacks = []
    lf = SIS(2, 1).lipschitz.drift
    for g, model, xi0, traj in _sis_runs(100):
        u = solve_meanfield(model, traj.x[0], 3.0, t_eval=traj.times)
        slacks.append(gronwall_slack(traj, u, reconstruct_k(traj.log), traj.log, lf))
    worst = min(slacks)
    elapsed = time.perf_counter() - start
    report(6, "pathwise Gronwall bound", worst >= -1e-9 and elapsed < 600, f"min slack {worst:.3g}, {elapsed:.0f} s")


def test_criterion_07_r1_scaling():
    start = time.perf_counter()
    ladder = [250, 500, 1000, 2000, 4000, 8000]
    means = [np.mean([r1(sample_graph(GraphParams(n, 0.1, seed=s))) for s in range(20)]) for n in ladder]
    slope = fit_loglog_slope(zip(ladder, means))
    elapsed = time.perf_counter() - start
    report(7, "R1 log-log slope", -0.6 <= slope <= -0.4 and elapsed < 300, f"slope {slope:.4f}, {elapsed:.0f} s")


def test_criterion_08_convergence_trend():
    tier = os.environ.get("ERDY_ACCEPTANCE_TIER", "full")
    name = "ci_sis_study.json" if tier == "ci" else "canonical_sis_study.json"
    start = time.perf_counter()
    config = StudyConfig.from_run_config(load_config(CONFIGS / name))
    result = run_convergence_study(config, workers=int(os.environ.get("ERDY_WORKERS", "1")))
    failed = [r for r in result.rows if r["status"] != "ok"]
    med_x = [v for _, v in result.series("sup_err_x", "median")]
    med_y = [v for _, v in result.series("sup_err_y", "median")]
    dec_x = all(b < a for a, b in zip(med_x, med_x[1:]))
    dec_y = all(b < a for a, b in zip(med_y, med_y[1:]))
    r1_slope = result.slopes["r1"].slope
    elapsed = time.perf_counter() - start
    limit = 900 if tier == "ci" else 7200
    ok = not failed and dec_x and dec_y and -0.6 <= r1_slope <= -0.4 and elapsed < limit
    detail = (
        f"{tier} ladder {config.ladder}; median x err "
        + " > ".join(f"{v:.3g}" for v in med_x)
        + "; median y err "
        + " > ".join(f"{v:.3g}" for v in med_y)
        + f"; R1 slope {r1_slope:.3f}; {elapsed:.0f} s"
    )
    report(8, "convergence trend of x and y", ok, detail)


def test_criterion_09_hand_statistics():
    g = sample_graph(GraphParams(4, 1.0, WeightDistribution.constant(1.0)))
    c12 = covariance_c(g, 0, 1)
    c11 = covariance_c(g, 0, 0)
    value, _ = r2(g)
    ok = abs(c12 + 1 / 16) <= 1e-12 and abs(c11 - 3 / 16) <= 1e-12 and abs(value - 1 / 6) <= 1e-12
    report(9, "hand-computed graph statistics", ok, f"c(1,2)={c12!r}, c(1,1)={c11!r}, R2={value!r}")


def _snapshot(directory, drop_wall=False):
    out = {}
    for path in sorted(Path(directory).rglob("*")):
        if path.is_file():
            text = path.read_text()
            if drop_wall and path.name == "rows.csv":
                text = "\n".join(ln.rsplit(",", 1)[0] for ln in text.splitlines())
            out[path.relative_to(directory).as_posix()] = text
    return out


def test_criterion_10_determinism(tmp_path):
    doc = {
        "model": {"type": "sis", "parameters": {"beta": 2.0, "gamma": 1.0}},
        "graph": {"n": 300, "p": 0.1, "weights": {"type": "exponential", "parameters": {"mean": 1.0}}, "seed": 17},
        "dynamics": {"horizon": 3.0, "u0": [0.8, 0.2], "sample_points": 61, "seed": 23},
        "study": {"ladder": [100, 200, 300], "replications": 3, "master_seed": 99},
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))

    def run_all(root, workers):
        root.mkdir()
        codes = [
            cli_main(["graph-gen", str(cfg), "--out", str(root / "graph.txt")]),
            cli_main(["simulate", str(cfg), "--out", str(root / "sim")]),
            cli_main(["simulate", str(cfg), "--graph", str(root / "graph.txt"), "--out", str(root / "sim_g")]),
            cli_main(["solve-mf", str(cfg), "--out", str(root / "mf")]),
            cli_main(["solve-nimfa", str(cfg), "--graph", str(root / "graph.txt"), "--out", str(root / "nimfa")]),
            cli_main(["study", str(cfg), "--workers", str(workers), "--out", str(root / "study"), "--quiet"]),
        ]
        return codes, _snapshot(root, drop_wall=True)

    codes_a, a = run_all(tmp_path / "a", 1)
    codes_b, b = run_all(tmp_path / "b", 1)
    codes_c, c = run_all(tmp_path / "c", 4)
    ok = codes_a == codes_b == codes_c == [0] * 6 and a == b == c and len(a) >= 10
    differing = sorted(k for k in a if a.get(k) != b.get(k) or a.get(k) != c.get(k))
    report(10, "byte-identical reruns across worker counts", ok,
           f"{len(a)} files compared, differing: {differing or 'none'}")
