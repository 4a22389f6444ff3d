"""Command-line entry point: ``erdy-meanfield <subcommand> CONFIG [options]``.

Exit codes: 0 on success, 1 on a runtime failure, 2 on a config or usage
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import export
from .approximations import solve_meanfield, solve_nimfa
from .config import ConfigError, load_config, require
from .experiments import StudyConfig, run_convergence_study
from .graph import GraphParams, check_assumptions, read_edge_list, sample_graph, write_edge_list
from .models import model_from_spec
from .simulation import initial_state, reconstruct_k, simulate, sup_h

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_step(fn, *args, **kwargs):
    """Run a constructor fed by config values; bad values are config errors."""
    try:
        return fn(*args, **kwargs)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _model(doc):
    spec = require(doc, "model")
    return _config_step(model_from_spec, spec, M=spec.get("M", 4.0))


def _out_dir(args, doc):
    out = args.out or doc.get("output", {}).get("directory") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _grid(doc, args):
    dyn = require(doc, "dynamics")
    points = args.sample_points or dyn.get("sample_points", 200)
    if points < 2:
        raise ConfigError("--sample-points must be at least 2")
    return np.linspace(0.0, dyn["horizon"], points)


def _load_graph(path):
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise ConfigError(f"cannot read graph {path}: {exc}") from exc


def _graph(doc, args):
    if getattr(args, "graph", None):
        return _load_graph(args.graph)
    params = _config_step(GraphParams.from_dict, require(doc, "graph"))
    return sample_graph(params)


def _seeds(doc):
    seed = require(doc, "dynamics").get("seed", 0)
    init_seed, sim_seed = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(init_seed), int(sim_seed)


def _initial(doc, graph, model, init_seed):
    dyn = require(doc, "dynamics")
    if "init" in dyn:
        xi = np.asarray(dyn["init"], dtype=np.int64)
        if len(xi) != graph.n:
            raise ConfigError(f"dynamics/init has {len(xi)} entries but the graph has {graph.n} vertices")
        if xi.max() >= model.state_count:
            raise ConfigError(f"dynamics/init uses a state >= {model.state_count}")
        return xi
    u0 = dyn["u0"]
    if len(u0) != model.state_count:
        raise ConfigError(f"dynamics/u0 has {len(u0)} entries, model has {model.state_count} states")
    return _config_step(initial_state, u0, graph.n, dyn.get("init_mode", "deterministic"), init_seed)


def _u0(doc, model):
    dyn = require(doc, "dynamics")
    if "u0" in dyn:
        u0 = np.asarray(dyn["u0"], dtype=np.float64)
    else:
        u0 = np.bincount(dyn["init"], minlength=model.state_count) / len(dyn["init"])
    if len(u0) != model.state_count:
        raise ConfigError(f"dynamics/u0 has {len(u0)} entries, model has {model.state_count} states")
    return u0


def _diagnostics(doc):
    toggles = {"k": True, "h": True}
    toggles.update(doc.get("study", {}).get("diagnostics", {}))
    return toggles


def cmd_graph_gen(args, doc):
    params = _config_step(GraphParams.from_dict, require(doc, "graph"))
    graph = sample_graph(params)
    out = Path(args.out or Path(doc.get("output", {}).get("directory", ".")) / "graph.txt")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(graph, out)
    ratio = check_assumptions(graph).lm_ratio
    print(f"N {graph.n}")
    print(f"edges {graph.edge_count}")
    print(f"mean_degree {graph.mean_degree:.17g}")
    print(f"max_degree_ratio {ratio:.17g}")
    print(f"wrote {out}")


def cmd_simulate(args, doc):
    model = _model(doc)
    grid = _grid(doc, args)
    graph = _graph(doc, args)
    init_seed, sim_seed = _seeds(doc)
    xi0 = _initial(doc, graph, model, init_seed)
    toggles = _diagnostics(doc)
    traj = simulate(graph, model, xi0, grid[-1], seed=sim_seed, grid=grid, record_h=toggles["h"])
    out = _out_dir(args, doc)
    export.write_path_csv(out / "trajectory.csv", traj.times, traj.x, "x")
    if doc.get("output", {}).get("event_log", True):
        export.write_event_log(out / "events.txt", traj.log)
    sidecar = {"n": graph.n, "events": len(traj.log)}
    if toggles["k"]:
        sidecar["sup_k"] = reconstruct_k(traj.log).sup_norm
    if toggles["h"]:
        sidecar["sup_h"] = sup_h(traj.log)
    export.write_sidecar(out / "diagnostics.txt", sidecar)
    print(f"{len(traj.log)} events; wrote {out}")


def cmd_solve_mf(args, doc):
    model = _model(doc)
    grid = _grid(doc, args)
    u0 = _u0(doc, model)
    sol = _config_step(solve_meanfield, model, u0, grid[-1], t_eval=grid)
    out = _out_dir(args, doc)
    export.write_path_csv(out / "meanfield.csv", sol.times, sol.u, "u")
    print(f"wrote {out / 'meanfield.csv'}")


def cmd_solve_nimfa(args, doc):
    model = _model(doc)
    grid = _grid(doc, args)
    graph = _load_graph(args.graph)
    dyn = require(doc, "dynamics")
    if "init" in dyn:
        z0 = np.eye(model.state_count)[_initial(doc, graph, model, 0)]
    else:
        z0 = _u0(doc, model)
    per_vertex = args.per_vertex or doc.get("output", {}).get("per_vertex_nimfa", False)
    sol = _config_step(solve_nimfa, graph, model, z0, grid[-1], t_eval=grid, store_z=per_vertex)
    out = _out_dir(args, doc)
    export.write_path_csv(out / "nimfa.csv", sol.times, sol.y, "y")
    if per_vertex:
        export.write_nimfa_vertices(out / "nimfa_vertices.csv", sol)
    print(f"wrote {out / 'nimfa.csv'}")


def cmd_study(args, doc):
    require(doc, "study")
    config = _config_step(StudyConfig.from_run_config, doc)
    model = _config_step(model_from_spec, config.model, M=config.M)
    if len(config.u0) != model.state_count:
        raise ConfigError("dynamics/u0 length does not match the model")
    workers = args.workers
    if workers is None:
        env = os.environ.get("ERDY_WORKERS", "1")
        try:
            workers = int(env)
        except ValueError as exc:
            raise ConfigError(f"ERDY_WORKERS must be an integer, got {env!r}") from exc
    if workers < 1:
        raise ConfigError("--workers must be at least 1")

    def progress(row):
        if not args.quiet:
            print(f"n={row['n']} seed={row['seed']} {row['status']} {row['wall_ms']:.0f} ms", flush=True)

    result = run_convergence_study(config, workers=workers, on_row=progress)
    out = _out_dir(args, doc)
    export.write_study_rows(out / "rows.csv", result.rows)
    export.write_aggregates(out / "aggregates.csv", result.aggregates)
    export.write_slopes(out / "slopes.txt", result.slopes)
    for metric, fit in result.slopes.items():
        print(f"{metric} slope {fit.slope:.4f}")
    failed = sum(r["status"] != "ok" for r in result.rows)
    if failed:
        print(f"{failed} of {len(result.rows)} rows failed", file=sys.stderr)
    print(f"wrote {out}")


def build_parser():
    parser = _Parser(prog="erdy-meanfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("config", help="JSON run configuration")
        p.set_defaults(func=fn)
        return p

    p = add("graph-gen", cmd_graph_gen, "Sample a weighted Erdős–Rényi graph and write its edge list.")
    p.add_argument("--out", help="edge-list path (default: <output.directory>/graph.txt)")

    p = add("simulate", cmd_simulate, "Run the exact stochastic simulation.")
    p.add_argument("--graph", help="edge-list file; sampled from the graph section when omitted")
    p.add_argument("--out", help="output directory (default: output.directory or .)")
    p.add_argument("--sample-points", type=int, help="number of grid points including both ends")

    p = add("solve-mf", cmd_solve_mf, "Solve the homogeneous mean-field ODE.")
    p.add_argument("--out", help="output directory (default: output.directory or .)")
    p.add_argument("--sample-points", type=int, help="number of grid points including both ends")

    p = add("solve-nimfa", cmd_solve_nimfa, "Solve NIMFA on a given graph.")
    p.add_argument("--graph", required=True, help="edge-list file (required)")
    p.add_argument("--out", help="output directory (default: output.directory or .)")
    p.add_argument("--sample-points", type=int, help="number of grid points including both ends")
    p.add_argument("--per-vertex", action="store_true", help="also write every z_i(t)")

    p = add("study", cmd_study, "Run a seeded convergence study over a ladder of sizes.")
    p.add_argument("--workers", type=int, help="parallel worker processes (default: $ERDY_WORKERS or 1)")
    p.add_argument("--out", help="output directory (default: output.directory or .)")
    p.add_argument("--quiet", action="store_true", help="suppress per-row progress lines")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = load_config(args.config)
        args.func(args, doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level exit-code contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
