"""Weighted Erdős–Rényi graphs and the graph statistics used by the
convergence diagnostics.

Edges are stored as a symmetric CSR structure (``indptr``, ``indices``,
``weights``) with sorted neighbour lists. Dense adjacency matrices are never
built, so large sparse graphs fit in memory.

Randomness is row-keyed: the upper-triangular row ``i`` (pairs ``(i, j)``
with ``j > i``) is drawn from two Philox streams whose 128-bit key is
``(seed, i)``. Rows can therefore be generated in any order, or in parallel,
and still produce bit-identical graphs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, DegenerateParametersError

__all__ = [
    "WeightDistribution",
    "GraphParams",
    "WeightedGraph",
    "AssumptionReport",
    "sample_graph",
    "mean_degree",
    "common_weight",
    "covariance_c",
    "r1",
    "r2",
    "check_assumptions",
    "write_edge_list",
    "read_edge_list",
    "CONFIG_TAG",
]

CONFIG_TAG = "# erdy-meanfield config-v1"

R2_EXACT_CAP = 2000

_WEIGHT_KINDS = ("constant", "exponential", "uniform", "lognormal")


@dataclass(frozen=True)
class WeightDistribution:
    """Distribution of the edge weights ``w_ij``.

    Use the named constructors (:meth:`constant`, :meth:`unweighted`,
    :meth:`exponential`, :meth:`uniform`, :meth:`lognormal`) rather than
    building the tuple of parameters by hand.
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _WEIGHT_KINDS:
            raise ValueError(f"unknown weight distribution {self.kind!r}")
        p = self.params
        if self.kind == "constant" and (len(p) != 1 or p[0] < 0):
            raise ValueError("constant weight needs one value >= 0")
        if self.kind == "exponential" and (len(p) != 1 or p[0] <= 0):
            raise ValueError("exponential weight needs a mean > 0")
        if self.kind == "uniform" and (len(p) != 2 or not 0 <= p[0] <= p[1]):
            raise ValueError("uniform weight needs 0 <= lo <= hi")
        if self.kind == "lognormal" and (len(p) != 2 or p[1] < 0):
            raise ValueError("lognormal weight needs (logmean, logsd >= 0)")

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", (float(value),))

    @classmethod
    def unweighted(cls):
        """``w = 1``: the plain Erdős–Rényi graph."""
        return cls.constant(1.0)

    @classmethod
    def exponential(cls, mean=1.0):
        return cls("exponential", (float(mean),))

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def lognormal(cls, logmean=0.0, logsd=1.0):
        return cls("lognormal", (float(logmean), float(logsd)))

    @property
    def mean(self):
        k, p = self.kind, self.params
        if k in ("constant", "exponential"):
            return p[0]
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        return math.exp(p[0] + 0.5 * p[1] ** 2)

    @property
    def variance(self):
        k, p = self.kind, self.params
        if k == "constant":
            return 0.0
        if k == "exponential":
            return p[0] ** 2
        if k == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        s2 = p[1] ** 2
        return math.expm1(s2) * math.exp(2 * p[0] + s2)

    @property
    def mgf_finite(self):
        """Whether ``log E exp(s w)`` is finite for some ``s > 0``."""
        return self.kind != "lognormal" or self.params[1] == 0.0

    def sample(self, rng, size):
        k, p = self.kind, self.params
        if k == "constant":
            return np.full(size, p[0])
        if k == "exponential":
            return rng.exponential(p[0], size)
        if k == "uniform":
            return rng.uniform(p[0], p[1], size)
        return rng.lognormal(p[0], p[1], size)

    def to_dict(self):
        names = {
            "constant": ("value",),
            "exponential": ("mean",),
            "uniform": ("lo", "hi"),
            "lognormal": ("logmean", "logsd"),
        }[self.kind]
        return {"type": self.kind, "parameters": dict(zip(names, self.params))}

    @classmethod
    def from_dict(cls, spec):
        kind = spec["type"]
        params = spec.get("parameters", {})
        if kind == "unweighted":
            return cls.unweighted()
        if kind == "constant":
            return cls.constant(params.get("value", 1.0))
        if kind == "exponential":
            return cls.exponential(params.get("mean", 1.0))
        if kind == "uniform":
            return cls.uniform(params["lo"], params["hi"])
        if kind == "lognormal":
            return cls.lognormal(params.get("logmean", 0.0), params.get("logsd", 1.0))
        raise ValueError(f"unknown weight distribution {kind!r}")


@dataclass(frozen=True)
class GraphParams:
    """Generation parameters: ``n`` vertices, edge probability ``p``,
    weight distribution and a 64-bit seed."""

    n: int
    edge_prob: float
    weights: WeightDistribution = field(default_factory=WeightDistribution.unweighted)
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise DegenerateParametersError(f"need n >= 2, got {self.n}")
        if not 0.0 < self.edge_prob <= 1.0:
            raise DegenerateParametersError(
                f"edge probability must lie in (0, 1], got {self.edge_prob}"
            )
        if self.weights.mean <= 0.0:
            raise DegenerateParametersError("weight mean is 0, so <d> = 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def mu_tilde(self):
        """``E a_ij = p mu``."""
        return self.edge_prob * self.weights.mean

    @property
    def sigma_tilde_sq(self):
        """``Var a_ij = p (sigma^2 + mu^2) - p^2 mu^2``."""
        p, mu, s2 = self.edge_prob, self.weights.mean, self.weights.variance
        return p * (s2 + mu * mu) - p * p * mu * mu

    @property
    def mean_degree(self):
        return (self.n - 1) * self.mu_tilde

    def to_dict(self):
        return {
            "n": self.n,
            "p": self.edge_prob,
            "weights": self.weights.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        weights = d.get("weights", {"type": "constant", "parameters": {"value": 1.0}})
        return cls(
            n=int(d["n"]),
            edge_prob=float(d["p"]),
            weights=WeightDistribution.from_dict(weights),
            seed=int(d.get("seed", 0)),
        )


def mean_degree(params):
    """Expected weighted degree ``<d> = (N - 1) p mu``."""
    return params.mean_degree


class WeightedGraph:
    """Immutable undirected weighted graph without loops.

    ``mean_degree`` is the deterministic normalizer ``<d>`` taken from the
    generation parameters, never the realized average degree.
    """

    def __init__(self, n, indptr, indices, weights, mean_degree, params=None):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.mean_degree = float(mean_degree)
        self.params = params
        if self.mean_degree <= 0.0:
            raise DegenerateParametersError("<d> must be positive")
        for a in (self.indptr, self.indices, self.weights):
            a.flags.writeable = False
        self.degree_sums = self._row_sums()
        self.degree_sums.flags.writeable = False

    @classmethod
    def from_edges(cls, n, edges, params=None, mean_degree=None):
        """Build a graph from ``(i, j[, w])`` tuples (0-based, each undirected
        edge listed once).

        The normalizer is taken from ``params`` if given, else from
        ``mean_degree``, else the realized average degree (1.0 when the graph
        has no edges; any positive value gives the same zero environments).
        """
        edges = list(edges)
        rows = np.array([e[0] for e in edges], dtype=np.int64)
        cols = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] if len(e) > 2 else 1.0 for e in edges], dtype=np.float64)
        if np.any(rows == cols):
            raise ValueError("loops are not allowed")
        if np.any(w <= 0):
            raise ValueError("edge weights must be positive")
        if params is not None:
            dbar = params.mean_degree
        elif mean_degree is not None:
            dbar = mean_degree
        else:
            dbar = 2.0 * w.sum() / n if len(w) else 1.0
        indptr, indices, weights = _symmetric_csr(n, rows, cols, w)
        return cls(n, indptr, indices, weights, dbar, params)

    def _row_sums(self):
        sums = np.zeros(self.n)
        for i in range(self.n):
            a, b = self.indptr[i], self.indptr[i + 1]
            sums[i] = math.fsum(self.weights[a:b])
        return sums

    def neighbours(self, i):
        """Sorted neighbour indices of ``i`` and the matching weights."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.weights[a:b]

    @property
    def edge_count(self):
        return len(self.indices) // 2

    @cached_property
    def adjacency(self):
        """Sparse (CSR) view of the weighted adjacency matrix."""
        return sp.csr_array(
            (self.weights, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def edges(self):
        """Arrays ``(i, j, w)`` of undirected edges with ``i < j``."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def validate(self):
        """Recheck symmetry, absence of loops, positivity and degree sums.

        Raises ``AssertionError`` on the first violation.
        """
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        assert not np.any(rows == self.indices), "loop present"
        assert np.all(self.weights > 0), "non-positive weight"
        for i in range(self.n):
            seg = self.indices[self.indptr[i] : self.indptr[i + 1]]
            assert np.all(np.diff(seg) > 0), f"row {i} not strictly sorted"
        fwd = sorted(zip(rows.tolist(), self.indices.tolist(), self.weights.tolist()))
        bwd = sorted(zip(self.indices.tolist(), rows.tolist(), self.weights.tolist()))
        assert fwd == bwd, "adjacency not symmetric"
        assert np.array_equal(self._row_sums(), self.degree_sums), "degree sums stale"

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.mean_degree == other.mean_degree
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"WeightedGraph(n={self.n}, edges={self.edge_count}, "
            f"mean_degree={self.mean_degree:.6g})"
        )


def _symmetric_csr(n, rows, cols, w):
    r = np.concatenate([rows, cols])
    c = np.concatenate([cols, rows])
    v = np.concatenate([w, w])
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]
    if len(r) > 1:
        dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
        if np.any(dup):
            raise ValueError("duplicate edge")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
    return indptr, c, v


def _row_streams(seed, i):
    key = (int(seed) << 64) | int(i)
    edge_rng = np.random.Generator(np.random.Philox(key=key))
    weight_rng = np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, 1]))
    return edge_rng, weight_rng


def _row_targets(rng, m, p):
    """Offsets in ``[0, m)`` of successful Bernoulli(p) trials, by geometric
    skipping (cost proportional to the number of successes)."""
    if p >= 1.0:
        return np.arange(m, dtype=np.int64)
    batch = int(m * p + 4.0 * math.sqrt(m * p) + 16)
    chunks = []
    last = -1
    while True:
        pos = last + np.cumsum(rng.geometric(p, batch))
        if pos[-1] >= m:
            chunks.append(pos[pos < m])
            break
        chunks.append(pos)
        last = pos[-1]
    return np.concatenate(chunks).astype(np.int64)


def sample_graph(params):
    """Sample ``a_ij = w_ij b_ij`` for ``i < j`` and mirror it.

    ``b_ij ~ Bernoulli(p)`` and ``w_ij`` i.i.d. from ``params.weights``; a
    zero weight means no edge. The result is a pure function of ``params``.
    """
    n, p = params.n, params.edge_prob
    rows, cols, ws = [], [], []
    for i in range(n - 1):
        edge_rng, weight_rng = _row_streams(params.seed, i)
        j = i + 1 + _row_targets(edge_rng, n - 1 - i, p)
        w = params.weights.sample(weight_rng, len(j))
        keep = w > 0
        rows.append(np.full(int(keep.sum()), i, dtype=np.int64))
        cols.append(j[keep])
        ws.append(w[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    ws = np.concatenate(ws)
    indptr, indices, weights = _symmetric_csr(n, rows, cols, ws)
    return WeightedGraph(n, indptr, indices, weights, params.mean_degree, params)


def common_weight(graph, i, j):
    """``d(i, j) = sum_k a_ik a_jk`` (weighted common neighbours)."""
    ni, wi = graph.neighbours(i)
    if i == j:
        return float(np.dot(wi, wi))
    nj, wj = graph.neighbours(j)
    if len(ni) == 0 or len(nj) == 0:
        return 0.0
    if len(ni) > len(nj):
        ni, wi, nj, wj = nj, wj, ni, wi
    pos = np.searchsorted(nj, ni)
    pos[pos == len(nj)] = 0
    hit = nj[pos] == ni
    return float(np.dot(wi[hit], wj[pos[hit]]))


def covariance_c(graph, i, j):
    """``c(i, j) = d(i, j)/N - d(i) d(j)/N^2``."""
    n = graph.n
    d = graph.degree_sums
    return float(common_weight(graph, i, j) / n - d[i] * d[j] / (n * n))


def r1(graph):
    """Degree-concentration statistic
    ``sqrt( sum_j (d(j) - <d>)^2 / (N <d>^2) )``."""
    dev = graph.degree_sums - graph.mean_degree
    return math.sqrt(float(np.dot(dev, dev)) / (graph.n * graph.mean_degree**2))


def _r2_exact(graph, block=256):
    n = graph.n
    a = graph.adjacency
    d = graph.degree_sums
    total = 0.0
    for start in range(0, n, block):
        stop = min(n, start + block)
        common = (a[start:stop] @ a).toarray()
        c = common / n - np.outer(d[start:stop], d) / (n * n)
        total += float(np.abs(c).sum())
    return total / graph.mean_degree**2


def _r2_sampled(graph, pair_count, seed):
    n = graph.n
    rng = np.random.default_rng(seed)
    d = graph.degree_sums
    diag = sum(abs(covariance_c(graph, i, i)) for i in range(n))
    ii = rng.integers(0, n, pair_count)
    jj = rng.integers(0, n - 1, pair_count)
    jj[jj >= ii] += 1
    vals = np.array(
        [abs(common_weight(graph, i, j) / n - d[i] * d[j] / (n * n)) for i, j in zip(ii, jj)]
    )
    scale = n * (n - 1) / graph.mean_degree**2
    est = diag / graph.mean_degree**2 + scale * vals.mean()
    se = scale * vals.std(ddof=1) / math.sqrt(pair_count) if pair_count > 1 else float("inf")
    return est, se


def r2(graph, mode="exact", pair_count=10_000, seed=0, cap=R2_EXACT_CAP):
    """Covariance-sum statistic ``sum_{i,j} |c(i,j)| / <d>^2``.

    ``mode="exact"`` evaluates the full double sum (refused above ``cap``
    vertices). ``mode="sampled"`` adds the exact diagonal to an unbiased
    estimate of the off-diagonal part from ``pair_count`` uniformly drawn
    ordered pairs. Returns ``(estimate, stderr)``; stderr is 0 in exact mode.
    """
    if mode == "exact":
        if graph.n > cap:
            raise CapacityError(
                f"exact R2 capped at n <= {cap} (got {graph.n}); use mode='sampled'"
            )
        return _r2_exact(graph), 0.0
    if mode == "sampled":
        return _r2_sampled(graph, pair_count, seed)
    raise ValueError(f"unknown r2 mode {mode!r}")


@dataclass(frozen=True)
class AssumptionReport:
    """Which sufficient conditions of the convergence theorem a realized
    graph/model pair meets.

    ``a2_epsilon_star`` is the largest ``eps`` with ``<d> >= N^(1/2 + eps)``;
    the multiplicative constant is left implicit.
    """

    a1: bool
    a2_epsilon_star: float
    b1: bool
    b2: bool
    lm_ratio: float
    lm_holds: bool
    M: float

    @property
    def a2(self):
        return self.a2_epsilon_star > 0

    @property
    def theorem_applies(self):
        return (self.a1 and self.a2) or (self.b1 and self.b2)

    def to_dict(self):
        out = asdict(self)
        out["a2"] = self.a2
        out["theorem_applies"] = self.theorem_applies
        return out


def check_assumptions(graph, model=False, M=4.0):
    """Evaluate A1/A2/B1/B2 and the event ``max_i d(i)/<d> <= M``.

    ``model`` is a rate model (its ``globally_lipschitz`` flag is used) or a
    plain boolean for A1.
    """
    if M <= 1:
        raise ValueError("M must exceed 1")
    a1 = bool(getattr(model, "globally_lipschitz", model))
    n = graph.n
    eps = math.log(graph.mean_degree) / math.log(n) - 0.5
    params = graph.params
    b1 = params is not None and params.edge_prob == 1.0
    b2 = params is not None and params.weights.mgf_finite
    ratio = float(graph.degree_sums.max()) / graph.mean_degree if n else 0.0
    return AssumptionReport(
        a1=a1,
        a2_epsilon_star=eps,
        b1=b1,
        b2=b2,
        lm_ratio=ratio,
        lm_holds=ratio <= M,
        M=float(M),
    )


def write_edge_list(graph, path):
    """Write ``N <n>`` then one ``i j w`` line per undirected edge (i < j,
    weights with 17 significant digits). Generation parameters, when known,
    go in a leading comment so :func:`read_edge_list` restores ``<d>``."""
    rows, cols, w = graph.edges()
    lines = [CONFIG_TAG]
    if graph.params is not None:
        lines.append("# params " + json.dumps(graph.params.to_dict(), sort_keys=True))
    else:
        lines.append(f"# mean_degree {graph.mean_degree!r}")
    lines.append(f"N {graph.n}")
    lines.extend(f"{i} {j} {x:.17g}" for i, j, x in zip(rows.tolist(), cols.tolist(), w.tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path, params=None):
    params_read = None
    dbar = None
    n = None
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# params "):
                params_read = GraphParams.from_dict(json.loads(line[len("# params ") :]))
            elif line.startswith("# mean_degree "):
                dbar = float(line.split()[2])
            continue
        if n is None:
            tag, value = line.split()
            if tag != "N":
                raise ValueError(f"{path}: first data line must be 'N <n>'")
            n = int(value)
            continue
        i, j, w = line.split()
        edges.append((int(i), int(j), float(w)))
    if n is None:
        raise ValueError(f"{path}: missing 'N <n>' line")
    params = params or params_read
    return WeightedGraph.from_edges(n, edges, params=params, mean_degree=dbar)
