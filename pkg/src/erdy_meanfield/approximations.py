"""Deterministic approximations: the homogeneous mean-field ODE
``u' = Q(u) u`` and NIMFA, ``z_i' = Q(rho_i) z_i`` with
``rho_i = (1/<d>) sum_j a_ij z_j``.

Solutions are not projected back onto the simplex. Both systems keep the
simplex invariant, so a violation beyond ``simplex_tol`` is reported as an
error instead of being repaired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SimplexViolationError
from .integrate import dopri5

__all__ = [
    "MeanFieldSolution",
    "NimfaSolution",
    "solve_meanfield",
    "solve_nimfa",
    "nimfa_rhs",
    "nimfa_average",
    "simplex_violation",
]

RTOL = 1e-8
ATOL = 1e-9
SIMPLEX_TOL = 1e-9


@dataclass
class MeanFieldSolution:
    times: np.ndarray
    u: np.ndarray
    stats: dict = field(default_factory=dict)


@dataclass
class NimfaSolution:
    """``y`` is stored for every grid time; per-vertex ``z`` (shape
    ``(G, N, S)``) only when requested."""

    times: np.ndarray
    y: np.ndarray
    z: np.ndarray | None
    graph: object = None
    stats: dict = field(default_factory=dict)


def simplex_violation(v):
    """Distance-like measure of how far rows of ``v`` (last axis = states)
    are from the simplex: max of ``|sum - 1|`` and ``-min entry``."""
    v = np.asarray(v)
    return max(float(np.abs(v.sum(axis=-1) - 1.0).max()), float(-min(v.min(), 0.0)))


def _grid(T, t_eval, n_points):
    if T <= 0:
        raise InvalidInputError("horizon must be positive")
    if t_eval is None:
        return np.linspace(0.0, T, n_points)
    return np.asarray(t_eval, dtype=np.float64)


def _check_simplex_input(v, what):
    if simplex_violation(v) > 1e-12:
        raise InvalidInputError(f"{what} must lie on the simplex")


def solve_meanfield(
    model, u0, T, t_eval=None, n_points=200, rtol=RTOL, atol=ATOL, step=None,
    simplex_tol=SIMPLEX_TOL,
):
    """Solve ``u' = f(u)`` on ``[0, T]``; values on ``t_eval`` (default
    ``n_points`` uniform points)."""
    u0 = np.asarray(u0, dtype=np.float64)
    _check_simplex_input(u0, "u0")
    grid = _grid(T, t_eval, n_points)

    def rhs(t, u):
        return model.drift(u)

    res = dopri5(rhs, (0.0, T), u0, grid, rtol=rtol, atol=atol, step=step)
    stats = _stats(res)
    stats["simplex_violation"] = simplex_violation(res.y)
    if simplex_tol is not None and stats["simplex_violation"] > simplex_tol:
        raise SimplexViolationError(
            f"mean-field solution left the simplex by {stats['simplex_violation']:.3g}"
        )
    return MeanFieldSolution(times=grid, u=res.y, stats=stats)


def _stats(res):
    return {
        "steps": res.steps,
        "rejected": res.rejected,
        "nfev": res.nfev,
        "max_error_estimate": res.max_error_estimate,
    }


def nimfa_rhs(graph, model, z):
    """``Q(rho_i) z_i`` for all vertices; one sparse pass builds every
    ``rho_i``."""
    rho = (graph.adjacency @ z) / graph.mean_degree
    return model.apply(rho, z)


def solve_nimfa(
    graph, model, z0, T, t_eval=None, n_points=200, rtol=RTOL, atol=ATOL, step=None,
    store_z=True, simplex_tol=SIMPLEX_TOL,
):
    """Solve the NIMFA system. ``z0`` is ``(N, S)`` or a single ``S``-vector
    used for every vertex."""
    n, S = graph.n, model.state_count
    z0 = np.asarray(z0, dtype=np.float64)
    if z0.ndim == 1:
        z0 = np.broadcast_to(z0, (n, S))
    if z0.shape != (n, S):
        raise InvalidInputError(f"z0 must have shape ({n}, {S}), got {z0.shape}")
    _check_simplex_input(z0, "every z_i(0)")
    grid = _grid(T, t_eval, n_points)

    def rhs(t, flat):
        return nimfa_rhs(graph, model, flat.reshape(n, S)).ravel()

    res = dopri5(rhs, (0.0, T), z0.ravel(), grid, rtol=rtol, atol=atol, step=step)
    z = res.y.reshape(len(grid), n, S)
    stats = _stats(res)
    stats["simplex_violation"] = simplex_violation(z)
    if simplex_tol is not None and stats["simplex_violation"] > simplex_tol:
        raise SimplexViolationError(
            f"NIMFA solution left the simplex by {stats['simplex_violation']:.3g}"
        )
    y = z.sum(axis=1) / n
    return NimfaSolution(times=grid, y=y, z=z if store_z else None, graph=graph, stats=stats)


def nimfa_average(solution):
    """``y(t) = (1/N) sum_i z_i(t)``."""
    if solution.z is None:
        return solution.y
    return solution.z.sum(axis=1) / solution.z.shape[1]
