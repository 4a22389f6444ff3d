"""Exact event-driven simulation of the local density-dependent process.

Each vertex ``i`` in state ``s`` jumps to ``k`` at rate ``Q_ks(phi_i)``. The
simulator caches every vertex's outflow column and total exit rate, keeps the
totals in a binary indexed tree for ``O(log N)`` selection, and after a jump
at ``j`` refreshes only ``j`` and its neighbours (the only environments that
changed). This has the same law as the unit-rate Poisson time-change
representation of the counting processes; the Poisson fluctuation term
``K`` is rebuilt afterwards from the logged cumulative intensities.

Channel matrices follow the rate convention of :mod:`.models`: entry
``[k, s]`` refers to jumps from ``s`` into ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidInputError, SimulationError
from .models import local_environments

__all__ = [
    "SystemState",
    "EventLog",
    "Trajectory",
    "KPath",
    "initial_state",
    "simulate",
    "reconstruct_k",
    "net_jump_counts",
    "compute_h",
    "gronwall_slack",
    "sup_h",
]

SIMPLEX_TOL = 1e-12


@dataclass
class SystemState:
    """Per-vertex states, cached environments and state counts at ``time``."""

    time: float
    xi: np.ndarray
    phi: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_assignment(cls, graph, xi, state_count, time=0.0):
        xi = np.asarray(xi, dtype=np.int64)
        return cls(
            time=float(time),
            xi=xi.copy(),
            phi=local_environments(graph, xi, state_count),
            counts=np.bincount(xi, minlength=state_count),
        )

    @property
    def x(self):
        return self.counts / len(self.xi)


@dataclass
class EventLog:
    """Realized jump record of one run.

    ``integrated[e]`` is the matrix of cumulative channel intensities
    ``Lambda_ks(t_e) = int_0^t_e sum_i Q_ks(phi_i) 1[xi_i = s] dtau`` at the
    ``e``-th event; ``final_integrated`` is its value at the horizon.
    ``h[0]`` is the local/global discrepancy ``H`` at time 0 and ``h[e + 1]``
    its value right after event ``e`` (``H`` is constant between events).
    """

    n: int
    state_count: int
    initial_xi: np.ndarray
    horizon: float
    times: np.ndarray
    vertices: np.ndarray
    from_states: np.ndarray
    to_states: np.ndarray
    integrated: np.ndarray
    final_integrated: np.ndarray
    h: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    def replay(self, upto=None):
        """State vector after the first ``upto`` events (all by default)."""
        xi = self.initial_xi.copy()
        m = len(self) if upto is None else upto
        for v, s, k in zip(self.vertices[:m], self.from_states[:m], self.to_states[:m]):
            if xi[v] != s:
                raise SimulationError(f"log inconsistent at vertex {v}: {xi[v]} != {s}")
            xi[v] = k
        return xi


@dataclass
class Trajectory:
    """Global fractions ``x(t)`` sampled on a grid, plus the full event log."""

    times: np.ndarray
    counts: np.ndarray
    log: EventLog
    initial_xi: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.counts / self.log.n


def initial_state(u0, n, mode="deterministic", seed=0):
    """Per-vertex initial states with ``x(0)`` close to ``u0``.

    ``deterministic``: counts are the largest-remainder rounding of ``n u0``
    (ties to the lower state index), placed on vertices by a seeded shuffle.
    ``multinomial``: i.i.d. draws from ``u0``.
    """
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.ndim != 1 or np.any(u0 < -SIMPLEX_TOL) or abs(u0.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidInputError(f"u0 must lie on the simplex, got {u0.tolist()}")
    u0 = np.clip(u0, 0.0, None)
    rng = np.random.default_rng(seed)
    S = len(u0)
    if mode == "deterministic":
        exact = n * u0
        counts = np.floor(exact).astype(np.int64)
        short = n - int(counts.sum())
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
        xi = np.repeat(np.arange(S, dtype=np.int64), counts)
        return rng.permutation(xi)
    if mode == "multinomial":
        return rng.choice(S, size=n, p=u0 / u0.sum()).astype(np.int64)
    raise InvalidInputError(f"unknown init mode {mode!r}")


class _Caches:
    """Mutable per-run bookkeeping (environments, outflow columns, tree)."""

    def __init__(self, graph, model, xi):
        self.graph = graph
        self.model = model
        self.S = model.state_count
        self.scaled = graph.weights / graph.mean_degree
        self.phi = None
        self.max_phi_drift = 0.0
        self.rebuild(xi)

    def rebuild(self, xi):
        g = self.graph
        fresh = _kernels.environments(g.indptr, g.indices, self.scaled, xi, self.S)
        if self.phi is not None:
            self.max_phi_drift = max(self.max_phi_drift, float(np.abs(fresh - self.phi).max()))
        self.phi = fresh
        self.cols = np.ascontiguousarray(self.model.exit_rates(fresh, xi))
        self.values = _kernels.row_sums(self.cols)
        self.tree = _kernels.build(self.values)
        self.channel = np.zeros((self.S, self.S))
        np.add.at(self.channel.T, xi, self.cols)


def _h_path(channels, counts, model, n):
    """``H`` from channel-rate snapshots: inflow minus outflow per state,
    averaged over vertices, minus the drift at the global state."""
    per_vertex = channels.sum(axis=2) - channels.sum(axis=1)
    x = counts / n
    return per_vertex / n - model.apply(x, x)


def simulate(
    graph,
    model,
    init,
    horizon,
    seed=0,
    sample_points=200,
    grid=None,
    record_h=True,
    rebuild_every=1_000_000,
):
    """Simulate the exact system on ``[0, horizon]``.

    ``init`` is a per-vertex state vector (see :func:`initial_state`).
    ``x`` is recorded on ``grid`` (default: ``sample_points`` uniform points
    including both ends). Cached environments and rates are rebuilt from
    scratch at every grid point and after ``rebuild_every`` events; the
    exponential clock is redrawn after each rebuild, which leaves the law
    unchanged (memorylessness).
    """
    n = graph.n
    S = model.state_count
    xi = np.array(init, dtype=np.int64)
    if xi.shape != (n,):
        raise InvalidInputError(f"init has shape {xi.shape}, graph has {n} vertices")
    if np.any(xi < 0) or np.any(xi >= S):
        raise InvalidInputError("init contains an invalid state index")
    T = float(horizon)
    if not T > 0:
        raise InvalidInputError("horizon must be positive")
    if grid is None:
        grid = np.linspace(0.0, T, sample_points)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > T:
        raise InvalidInputError("grid must be increasing inside [0, horizon]")

    rng = np.random.default_rng(seed)
    caches = _Caches(graph, model, xi)
    indptr, indices, scaled = graph.indptr, graph.indices, caches.scaled
    counts = np.bincount(xi, minlength=S)
    initial_xi = xi.copy()
    initial_counts = counts.copy()

    G = len(grid)
    out_counts = np.empty((G, S), dtype=np.int64)
    ev_t, ev_v, ev_s, ev_k, ev_lam = [], [], [], [], []
    ev_chan = [caches.channel.copy()] if record_h else None
    lam = np.zeros((S, S))
    t = 0.0
    g = 0
    while g < G and grid[g] <= t:
        out_counts[g] = counts
        g += 1

    batch = 1024
    exps = rng.standard_exponential(batch)
    unis = rng.random(batch)
    b = 0
    since_rebuild = 0
    rebuilds = 0

    while True:
        if g >= G and t >= T:
            break
        t_stop = grid[g] if g < G else T
        tot = _kernels.total(caches.tree)
        if not math.isfinite(tot):
            raise SimulationError(
                f"non-finite total rate at t={t}",
                state=SystemState(t, xi.copy(), caches.phi.copy(), counts.copy()),
            )
        if b >= batch:
            exps = rng.standard_exponential(batch)
            unis = rng.random(batch)
            b = 0
        dt = exps[b] / tot if tot > 0 else math.inf
        if t + dt >= t_stop:
            lam += caches.channel * (t_stop - t)
            t = t_stop
            b += 1
            while g < G and grid[g] <= t:
                out_counts[g] = counts
                g += 1
            if since_rebuild:
                caches.rebuild(xi)
                rebuilds += 1
                since_rebuild = 0
            continue

        target = unis[b] * tot
        b += 1
        t += dt
        lam += caches.channel * dt
        v, rem = _kernels.search(caches.tree, target)
        if caches.values[v] <= 0.0:
            # only reachable through accumulated rounding in the tree
            caches.tree = _kernels.build(caches.values)
            v, rem = _kernels.search(caches.tree, target * _kernels.total(caches.tree) / tot)
        col = caches.cols[v]
        k = int(np.searchsorted(np.cumsum(col), rem, side="right"))
        if k >= S or col[k] <= 0.0:
            k = int(np.flatnonzero(col > 0.0)[-1])
        s = int(xi[v])

        ev_t.append(t)
        ev_v.append(v)
        ev_s.append(s)
        ev_k.append(k)
        ev_lam.append(lam.copy())

        phi = caches.phi
        _kernels.shift_environments(phi, indptr, indices, scaled, v, s, k)
        xi[v] = k
        aff = _kernels.affected(indptr, indices, v)
        states = xi[aff]
        try:
            new_cols = model.exit_rates(phi[aff], states)
        except Exception as exc:
            exc.state = SystemState(t, xi.copy(), phi.copy(), counts.copy())
            raise
        _kernels.commit(
            caches.cols, caches.values, caches.tree, caches.channel,
            aff, states, s, np.ascontiguousarray(new_cols, dtype=np.float64),
        )
        counts[s] -= 1
        counts[k] += 1
        if record_h:
            ev_chan.append(caches.channel.copy())

        since_rebuild += 1
        if since_rebuild >= rebuild_every:
            caches.rebuild(xi)
            rebuilds += 1
            since_rebuild = 0

    E = len(ev_t)
    log = EventLog(
        n=n,
        state_count=S,
        initial_xi=initial_xi,
        horizon=T,
        times=np.array(ev_t, dtype=np.float64),
        vertices=np.array(ev_v, dtype=np.int64),
        from_states=np.array(ev_s, dtype=np.int64),
        to_states=np.array(ev_k, dtype=np.int64),
        integrated=np.array(ev_lam, dtype=np.float64).reshape(E, S, S),
        final_integrated=lam.copy(),
    )
    if record_h:
        path_counts = np.vstack([initial_counts, initial_counts + net_jump_counts(log)])
        log.h = _h_path(np.array(ev_chan), path_counts, model, n)
    stats = {
        "events": E,
        "rebuilds": rebuilds,
        "max_phi_drift": caches.max_phi_drift,
    }
    return Trajectory(times=grid.copy(), counts=out_counts, log=log, initial_xi=initial_xi, stats=stats)


@dataclass
class KPath:
    """Exact Poisson-fluctuation path.

    ``K_sk(t) = (J_sk(t) - Lambda_sk(t)) / N`` per channel (``J`` the jump
    count); the aggregated vector is ``K_s = sum_k K_sk - K_ks``. Between
    events ``K`` is linear, so its l1 sup over ``[0, T]`` is attained at the
    left/right limits at event times or at ``T``.
    """

    times: np.ndarray
    channels_left: np.ndarray
    channels_right: np.ndarray
    channels_final: np.ndarray

    @staticmethod
    def _aggregate(kmat):
        return kmat.sum(axis=-1) - kmat.sum(axis=-2)

    @property
    def left(self):
        return self._aggregate(self.channels_left)

    @property
    def right(self):
        return self._aggregate(self.channels_right)

    @property
    def final(self):
        return self._aggregate(self.channels_final)

    @property
    def sup_norm(self):
        best = float(np.abs(self.final).sum())
        if len(self.times):
            best = max(best, float(np.abs(self.left).sum(axis=1).max()))
            best = max(best, float(np.abs(self.right).sum(axis=1).max()))
        return best


def _jump_matrices(log):
    E, S = len(log), log.state_count
    inc = np.zeros((E, S, S))
    inc[np.arange(E), log.to_states, log.from_states] = 1.0
    after = np.cumsum(inc, axis=0)
    return after - inc, after


def reconstruct_k(log, n=None):
    """Rebuild ``K`` from an event log (exact at event boundaries)."""
    n = log.n if n is None else n
    before, after = _jump_matrices(log)
    total_jumps = after[-1] if len(log) else np.zeros((log.state_count,) * 2)
    return KPath(
        times=log.times.copy(),
        channels_left=(before - log.integrated) / n,
        channels_right=(after - log.integrated) / n,
        channels_final=(total_jumps - log.final_integrated) / n,
    )


def net_jump_counts(log):
    """Integer ``sum_k J_sk - J_ks`` after each event, shape ``(E, S)``."""
    E, S = len(log), log.state_count
    net = np.zeros((E, S), dtype=np.int64)
    net[np.arange(E), log.to_states] += 1
    net[np.arange(E), log.from_states] -= 1
    return np.cumsum(net, axis=0)


def compute_h(graph, model, state):
    """``H = (1/N) sum_i Q(phi_i) xi_i - Q(x) x`` evaluated from scratch."""
    n = graph.n
    phi = local_environments(graph, state.xi, model.state_count)
    cols = model.exit_rates(phi, state.xi)
    per_vertex = cols.copy()
    per_vertex[np.arange(n), state.xi] -= cols.sum(axis=1)
    counts = np.bincount(state.xi, minlength=model.state_count)
    return per_vertex.sum(axis=0) / n - model.drift(counts / n)


def sup_h(log):
    """``sup_t |H(t)|_1`` over the run (``H`` is piecewise constant)."""
    if log.h is None:
        raise ValueError("run was simulated with record_h=False")
    return float(np.abs(log.h).sum(axis=1).max())


def gronwall_slack(traj, mf_u, kpath, h, lipschitz_drift, horizon=None):
    """Slack of the pathwise Grönwall bound

    ``(|x(0)-u(0)| + sup|K| + T sup|H|) exp(L_f T) - sup_t |x(t)-u(t)|``

    with the sup of ``|x - u|`` taken over the sampling grid. ``mf_u`` is the
    mean-field solution on ``traj.times`` (array ``(G, S)`` or an object with
    a ``u`` attribute); ``h`` is an event log, an ``H`` path, or ``sup|H|``.
    """
    u = getattr(mf_u, "u", mf_u)
    T = traj.log.horizon if horizon is None else horizon
    if isinstance(h, EventLog):
        h_sup = sup_h(h)
    elif np.ndim(h) == 0:
        h_sup = float(h)
    else:
        h_sup = float(np.abs(np.asarray(h)).sum(axis=-1).max())
    x = traj.x
    start = float(np.abs(x[0] - u[0]).sum())
    sup_err = float(np.abs(x - u).sum(axis=1).max())
    bound = (start + kpath.sup_norm + T * h_sup) * math.exp(lipschitz_drift * T)
    return bound - sup_err
