"""Local rate models ``phi -> Q(phi)``.

Index convention: ``Q[k, s]`` is the rate at which a vertex currently in
state ``s`` jumps to state ``k``; column ``s`` holds the outflow rates of
state ``s`` and the mean-field drift is ``f(u) = Q(u) u``. Models supply the
off-diagonal rates only. The diagonal is always assembled as minus the column
sum, so a user model cannot break the ``Q_ss = -sum_{k != s} Q_ks``
convention.

All rate evaluators are vectorised over a leading batch axis: ``phi`` of
shape ``(m, S)`` maps to off-diagonal rates of shape ``(m, S, S)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelContractError

__all__ = [
    "LipschitzConstants",
    "RateModel",
    "SIS",
    "SIR",
    "Voter",
    "QuadraticSIS",
    "CustomModel",
    "model_from_spec",
    "local_environment",
    "local_environments",
    "estimate_drift_lipschitz",
]


@dataclass(frozen=True)
class LipschitzConstants:
    """Declared Lipschitz data (all w.r.t. the l1 norm).

    ``entries[k, s]`` bounds ``Q_ks`` and ``operator`` bounds ``phi -> Q(phi)``
    in the induced l1 operator norm, both on ``Delta_M`` (nonnegative vectors
    of l1 mass at most ``M``). ``drift`` bounds ``f`` on the simplex.
    """

    entries: np.ndarray
    operator: float
    drift: float
    M: float


def _check_nonnegative(**params):
    for name, value in params.items():
        if not value >= 0:
            raise ValueError(f"{name} must be nonnegative, got {value}")


class RateModel:
    """Base class. Subclasses implement :meth:`_rates`."""

    state_names: tuple = ()
    globally_lipschitz: bool = False

    def __init__(self, M=4.0):
        self.M = float(M)

    @property
    def state_count(self):
        return len(self.state_names)

    def _rates(self, phi):
        raise NotImplementedError

    @property
    def lipschitz(self) -> LipschitzConstants:
        raise NotImplementedError

    @property
    def spec(self):
        """JSON-able ``{"type", "parameters"}`` description."""
        raise NotImplementedError

    def offdiagonal(self, phi, check=True):
        """Off-diagonal rates for a batch of environments, shape ``(m, S, S)``
        with a zero diagonal."""
        phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
        r = np.asarray(self._rates(phi), dtype=np.float64)
        idx = np.arange(self.state_count)
        r[:, idx, idx] = 0.0
        if check and not np.all(r >= 0):
            bad = np.argwhere(~(r >= 0))[0]
            m, k, s = (int(v) for v in bad)
            raise ModelContractError(
                f"{type(self).__name__}: rate {self.state_names[s]}->"
                f"{self.state_names[k]} is {r[m, k, s]!r} at phi={phi[m].tolist()}",
                to_state=k,
                from_state=s,
                phi=phi[m].copy(),
            )
        return r

    def rate_matrix(self, phi):
        """Full ``S x S`` generator ``Q(phi)`` for one environment."""
        q = self.offdiagonal(np.asarray(phi, dtype=np.float64)[None, :])[0]
        q[np.diag_indices_from(q)] = -q.sum(axis=0)
        return q

    def exit_rates(self, phi, states):
        """Rates out of each vertex's own state: row ``m`` holds
        ``Q[:, states[m]](phi[m])`` with the own-state entry zeroed."""
        r = self.offdiagonal(phi)
        return r[np.arange(len(r)), :, states]

    def apply(self, phi, z):
        """Batched ``Q(phi_m) z_m`` for ``phi, z`` of shape ``(m, S)``."""
        r = self.offdiagonal(phi)
        return np.einsum("mks,ms->mk", r, z) - r.sum(axis=1) * z

    def drift(self, u):
        """Mean-field drift ``f(u) = Q(u) u``."""
        u = np.asarray(u, dtype=np.float64)
        return self.apply(u[None, :], u[None, :])[0]

    def __repr__(self):
        return f"{type(self).__name__}({self.spec['parameters']})"


class SIS(RateModel):
    """Susceptible-infected-susceptible: ``S -> I`` at ``beta * phi_I``,
    ``I -> S`` at ``gamma``."""

    state_names = ("S", "I")
    globally_lipschitz = True

    def __init__(self, beta=2.0, gamma=1.0, M=4.0):
        super().__init__(M)
        self.beta = float(beta)
        self.gamma = float(gamma)
        _check_nonnegative(beta=self.beta, gamma=self.gamma)

    def _rates(self, phi):
        r = np.zeros((len(phi), 2, 2))
        r[:, 1, 0] = self.beta * phi[:, 1]
        r[:, 0, 1] = self.gamma
        return r

    def exit_rates(self, phi, states):
        out = np.zeros((len(states), 2))
        out[:, 1] = np.where(states == 0, self.beta * phi[:, 1], 0.0)
        out[:, 0] = np.where(states == 1, self.gamma, 0.0)
        return out

    @property
    def lipschitz(self):
        # On the simplex f reduces to g(a) = beta a (1 - a) - gamma a.
        return LipschitzConstants(
            entries=np.array([[0.0, 0.0], [self.beta, 0.0]]),
            operator=2 * self.beta,
            drift=self.beta + self.gamma,
            M=self.M,
        )

    @property
    def spec(self):
        return {"type": "sis", "parameters": {"beta": self.beta, "gamma": self.gamma}}


class SIR(RateModel):
    """``S -> I`` at ``beta * phi_I``, ``I -> R`` at ``gamma``."""

    state_names = ("S", "I", "R")
    globally_lipschitz = True

    def __init__(self, beta=2.0, gamma=1.0, M=4.0):
        super().__init__(M)
        self.beta = float(beta)
        self.gamma = float(gamma)
        _check_nonnegative(beta=self.beta, gamma=self.gamma)

    def _rates(self, phi):
        r = np.zeros((len(phi), 3, 3))
        r[:, 1, 0] = self.beta * phi[:, 1]
        r[:, 2, 1] = self.gamma
        return r

    def exit_rates(self, phi, states):
        out = np.zeros((len(states), 3))
        out[:, 1] = np.where(states == 0, self.beta * phi[:, 1], 0.0)
        out[:, 2] = np.where(states == 1, self.gamma, 0.0)
        return out

    @property
    def lipschitz(self):
        entries = np.zeros((3, 3))
        entries[1, 0] = self.beta
        # max over simplex edges e_a - e_b of |J (e_a - e_b)|_1 / 2; the
        # S-I direction at u_I = 1 attains beta + gamma.
        return LipschitzConstants(
            entries=entries,
            operator=2 * self.beta,
            drift=self.beta + self.gamma,
            M=self.M,
        )

    @property
    def spec(self):
        return {"type": "sir", "parameters": {"beta": self.beta, "gamma": self.gamma}}


class Voter(RateModel):
    """Voter model: ``0 -> 1`` at ``lam * phi_1``, ``1 -> 0`` at ``lam * phi_0``.

    The homogeneous drift vanishes identically, so every point of the simplex
    is a mean-field fixed point.
    """

    state_names = ("0", "1")
    globally_lipschitz = True

    def __init__(self, lam=1.0, M=4.0):
        super().__init__(M)
        self.lam = float(lam)
        _check_nonnegative(lam=self.lam)

    def _rates(self, phi):
        r = np.zeros((len(phi), 2, 2))
        r[:, 1, 0] = self.lam * phi[:, 1]
        r[:, 0, 1] = self.lam * phi[:, 0]
        return r

    def exit_rates(self, phi, states):
        out = np.zeros((len(states), 2))
        out[:, 1] = np.where(states == 0, self.lam * phi[:, 1], 0.0)
        out[:, 0] = np.where(states == 1, self.lam * phi[:, 0], 0.0)
        return out

    @property
    def lipschitz(self):
        return LipschitzConstants(
            entries=np.array([[0.0, self.lam], [self.lam, 0.0]]),
            operator=2 * self.lam,
            drift=0.0,
            M=self.M,
        )

    @property
    def spec(self):
        return {"type": "voter", "parameters": {"lam": self.lam}}


class QuadraticSIS(RateModel):
    """``S -> I`` at ``beta * phi_I**2``, ``I -> S`` at ``gamma``.

    Only locally Lipschitz (assumption A1 fails); constants hold on
    ``Delta_M``.
    """

    state_names = ("S", "I")
    globally_lipschitz = False

    def __init__(self, beta=2.0, gamma=1.0, M=4.0):
        super().__init__(M)
        self.beta = float(beta)
        self.gamma = float(gamma)
        _check_nonnegative(beta=self.beta, gamma=self.gamma)

    def _rates(self, phi):
        r = np.zeros((len(phi), 2, 2))
        r[:, 1, 0] = self.beta * phi[:, 1] ** 2
        r[:, 0, 1] = self.gamma
        return r

    def exit_rates(self, phi, states):
        out = np.zeros((len(states), 2))
        out[:, 1] = np.where(states == 0, self.beta * phi[:, 1] ** 2, 0.0)
        out[:, 0] = np.where(states == 1, self.gamma, 0.0)
        return out

    @property
    def lipschitz(self):
        # |g'(a)| = |beta (2a - 3a^2) - gamma| <= beta + gamma on [0, 1]
        return LipschitzConstants(
            entries=np.array([[0.0, 0.0], [2 * self.beta * self.M, 0.0]]),
            operator=4 * self.beta * self.M,
            drift=self.beta + self.gamma,
            M=self.M,
        )

    @property
    def spec(self):
        return {"type": "quadratic", "parameters": {"beta": self.beta, "gamma": self.gamma}}


class CustomModel(RateModel):
    """Model assembled from user rate functions.

    ``rates`` maps ``(from_state, to_state)`` (names or indices) to a callable
    taking ``phi`` of shape ``(m, S)`` and returning ``m`` nonnegative rates.
    Lipschitz data must be supplied by the caller if diagnostics need it.
    """

    def __init__(self, state_names, rates, lipschitz=None, globally_lipschitz=False, M=4.0):
        super().__init__(M)
        self.state_names = tuple(state_names)
        self.globally_lipschitz = bool(globally_lipschitz)
        self._lipschitz = lipschitz
        self._channels = []
        for (src, dst), fn in rates.items():
            s = self._index(src)
            k = self._index(dst)
            if s == k:
                raise ValueError("diagonal rates are assembled, not supplied")
            self._channels.append((k, s, fn))

    def _index(self, state):
        if isinstance(state, str):
            return self.state_names.index(state)
        return int(state)

    def _rates(self, phi):
        S = self.state_count
        r = np.zeros((len(phi), S, S))
        for k, s, fn in self._channels:
            r[:, k, s] = fn(phi)
        return r

    @property
    def lipschitz(self):
        if self._lipschitz is None:
            raise AttributeError("no Lipschitz constants declared for this model")
        return self._lipschitz

    @property
    def spec(self):
        return {"type": "custom", "parameters": {"states": list(self.state_names)}}


_BUILTINS = {"sis": SIS, "sir": SIR, "voter": Voter, "quadratic": QuadraticSIS}


def model_from_spec(spec, M=4.0):
    """Instantiate a built-in model from ``{"type": ..., "parameters": {...}}``."""
    kind = spec["type"].lower()
    if kind not in _BUILTINS:
        raise ValueError(f"unknown model type {spec['type']!r}; choose from {sorted(_BUILTINS)}")
    return _BUILTINS[kind](**spec.get("parameters", {}), M=M)


def local_environments(graph, xi, state_count):
    """All ``phi_i = (1/<d>) sum_j a_ij e_{xi_j}`` as an ``(n, S)`` array."""
    onehot = np.zeros((graph.n, state_count))
    onehot[np.arange(graph.n), xi] = 1.0
    return (graph.adjacency @ onehot) / graph.mean_degree


def local_environment(graph, xi, i, state_count):
    """Environment of a single vertex; its l1 norm is ``d(i)/<d>``."""
    nbrs, w = graph.neighbours(i)
    phi = np.zeros(state_count)
    np.add.at(phi, np.asarray(xi)[nbrs], w)
    return phi / graph.mean_degree


def estimate_drift_lipschitz(model, pairs=10_000, seed=0):
    """Largest observed ``|f(u) - f(v)|_1 / |u - v|_1`` over random simplex
    pairs. A lower bound on the true constant, used to cross-check the
    declared value."""
    rng = np.random.default_rng(seed)
    S = model.state_count
    u = rng.dirichlet(np.ones(S), pairs)
    v = rng.dirichlet(np.ones(S), pairs)
    fu = model.apply(u, u)
    fv = model.apply(v, v)
    num = np.abs(fu - fv).sum(axis=1)
    den = np.abs(u - v).sum(axis=1)
    ok = den > 0
    return float((num[ok] / den[ok]).max())
