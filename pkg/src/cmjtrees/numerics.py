"""Adaptive Simpson quadrature and a classical Runge-Kutta integrator."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class QuadratureError(ArithmeticError):
    pass


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    rel_tol: float = 0.0,
    max_depth: int = 50,
    max_evals: int = 2_000_000,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    A panel is accepted when its two-halves estimate differs from the whole
    panel estimate by at most ``15 * max(tol * w / (b - a), rel_tol * |S|)``,
    where ``w`` is the panel width and ``S`` the panel estimate.

    Returns
    -------
    value, error : float
        The integral and the summed local error estimates.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    width = b - a
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = width / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, 0)]
    total = 0.0
    err = 0.0
    evals = 3
    while stack:
        evals += 2
        if evals > max_evals:
            raise QuadratureError(f"no convergence within {max_evals} evaluations")
        lo, hi, flo, fmid, fhi, s, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm)
        frm = f(rm)
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * flm + fmid)
        right = h / 12.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if not math.isfinite(delta):
            raise QuadratureError(f"non-finite integrand on [{lo}, {hi}]")
        allowed = 15.0 * max(tol * h / width, rel_tol * abs(left + right))
        if abs(delta) <= allowed or depth >= max_depth:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, depth + 1))
    return sign * total, err


def rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step classical Runge-Kutta from ``t = 0`` to ``t_end``.

    The last step is shortened so the grid ends exactly at ``t_end``.
    """
    n_steps = max(1, int(math.ceil(t_end / step - 1e-9)))
    ts = np.linspace(0.0, t_end, n_steps + 1)
    ys = np.empty((n_steps + 1, len(y0)))
    y = np.asarray(y0, dtype=float)
    ys[0] = y
    for k in range(n_steps):
        t = ts[k]
        h = ts[k + 1] - t
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    return ts, ys


def hermite_interpolate(ts: np.ndarray, ys: np.ndarray, dys: np.ndarray, t):
    """Piecewise cubic Hermite interpolation through values and slopes."""
    t = np.asarray(t, dtype=float)
    k = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2)
    h = ts[k + 1] - ts[k]
    s = (t - ts[k]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * ys[k] + h10 * h * dys[k] + h01 * ys[k + 1] + h11 * h * dys[k + 1]
