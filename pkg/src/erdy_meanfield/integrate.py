"""Dormand–Prince 5(4) explicit Runge–Kutta integrator with dense output.

Adaptive mode uses the embedded 4th-order solution for error control and
propagates the 5th-order one (local extrapolation). Values at requested
output times come from the method's free 4th-order continuous extension, so
the step sequence does not depend on the output grid. Fixed-step mode
(``step=h``) skips error control and exists for order-of-accuracy checks.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
ERR = B5 - B4
# continuous extension (Hairer & Wanner, dopri5 "contd5")
DENSE = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    steps: int
    rejected: int
    nfev: int
    max_error_estimate: float


def _stages(fun, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(A[i], k) if a != 0.0)
        k.append(fun(t + C[i] * h, yi))
    return k


def _dense(y0, y1, k, h, theta):
    ydiff = y1 - y0
    bspl = h * k[0] - ydiff
    r4 = ydiff - h * k[6] - bspl
    r5 = h * sum(d * kj for d, kj in zip(DENSE, k) if d != 0.0)
    return y0 + theta * (ydiff + (1 - theta) * (bspl + theta * (r4 + (1 - theta) * r5)))


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dopri5(fun, t_span, y0, t_eval, rtol=1e-8, atol=1e-9, step=None, max_steps=10_000_000):
    """Integrate ``y' = fun(t, y)`` over ``t_span`` and report ``y`` at
    ``t_eval`` (sorted, inside the span).

    Raises :class:`IntegrationError` on step-size underflow or non-finite
    values.
    """
    t0, tf = map(float, t_span)
    y = np.array(y0, dtype=np.float64)
    t_eval = np.asarray(t_eval, dtype=np.float64)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0 or t_eval[-1] > tf:
        raise ValueError("t_eval must be sorted and inside t_span")
    out = np.empty((len(t_eval),) + y.shape)
    j = 0
    while j < len(t_eval) and t_eval[j] == t0:
        out[j] = y
        j += 1

    t = t0
    f = fun(t, y)
    nfev = 1
    steps = rejected = 0
    max_err = 0.0
    span = tf - t0
    if step is None:
        h = _initial_step(fun, t0, y, f, rtol, atol, span)
        nfev += 1
    else:
        h = float(step)

    while t < tf:
        if steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t}")
        h = min(h, tf - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t} (h={h:.3g})")
        k = _stages(fun, t, y, f, h)
        nfev += 6
        y_new = y + h * sum(b * kj for b, kj in zip(B5, k) if b != 0.0)
        if not np.all(np.isfinite(y_new)):
            if step is not None:
                raise IntegrationError(f"non-finite state at t={t + h}")
            h *= 0.2
            rejected += 1
            continue
        if step is None:
            err = _error_norm(h * sum(e * kj for e, kj in zip(ERR, k) if e != 0.0), y, y_new, rtol, atol)
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** -0.2)
                rejected += 1
                continue
            max_err = max(max_err, err)
        t_new = tf if tf - (t + h) <= 1e-14 * max(1.0, abs(tf)) else t + h
        while j < len(t_eval) and t_eval[j] <= t_new:
            theta = (t_eval[j] - t) / h
            out[j] = y_new if t_eval[j] == t_new else _dense(y, y_new, k, h, theta)
            j += 1
        t, y, f = t_new, y_new, k[6]
        steps += 1
        if step is None:
            h *= min(10.0, 0.9 * err ** -0.2) if err > 0 else 10.0

    return OdeResult(
        t=t_eval.copy(),
        y=out,
        steps=steps,
        rejected=rejected,
        nfev=nfev,
        max_error_estimate=max_err,
    )
