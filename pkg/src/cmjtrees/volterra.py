"""Grid solver for the Volterra-type fixed-point equation satisfied by p(t).

Every model reduces to integrals of the form

    K(t) = e^{-b t} int_0^t e^{b u} F(u) du,

which satisfy the exact one-step identity
``K(t + h) = e^{-b h} K(t) + int_t^{t+h} e^{-b (t + h - u)} F(u) du``.
The remaining integral is approximated by the trapezoidal rule, so the
knot value ``p_k`` appears on both sides with an ``O(h)`` coefficient and is
found by fixed-point iteration.

Per model (``p(0) = 1`` throughout):

* RRT: ``p = exp(-A)``, ``A = int_0^t p``.
* BST: ``p = (1 - J)^2``, ``J = K[b=1, F=p]``.
* PA: ``p = e^{-rho t} + rho K[b=rho, F=(1-p) p^{chi'+1}]``.
* XBST: ``p = e^{-t} + K[b=1, F=(1-p)^2]``.
* MARY (m = 3): ``g = 1 - K[b=1, F=p]`` and ``p = e^{-2t} + 2 K[b=2, F=g^3]``.
"""

from __future__ import annotations

import math

import numpy as np

from .analytic import PFunction
from .models import Model, ModelSpec

MAX_ITERATIONS = 50
ITERATION_TOL = 1e-12
INITIAL_GUESSES = ("previous", "upper", "lower")


class FixedPointError(ArithmeticError):
    """The knot iteration failed to converge."""


def solve_p_generic(
    spec: ModelSpec,
    t_max: float,
    step: float,
    relaxation: float = 1.0,
    initial: str = "previous",
) -> PFunction:
    """Solve for ``p`` on the uniform grid ``0, step, ..., t_max``.

    Parameters
    ----------
    spec : ModelSpec
        Any of the five models; MARY requires ``m = 3``.
    t_max, step : float
        Grid range and spacing; the last step is shortened to land on
        ``t_max``.
    relaxation : float
        Damping ``w`` of the knot iteration ``p <- (1 - w) p + w G(p)``.
    initial : {"previous", "upper", "lower"}
        Starting value of each knot iteration: the previous knot, 1 or 0.

    Returns
    -------
    PFunction
        A ``grid`` kind evaluator interpolating linearly between knots.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not t_max >= 0:
        raise ValueError("t_max must be non-negative")
    if not 0 < relaxation <= 2:
        raise ValueError("relaxation must lie in (0, 2]")
    if initial not in INITIAL_GUESSES:
        raise ValueError(f"initial must be one of {INITIAL_GUESSES}")
    n_steps = max(1, int(math.ceil(t_max / step - 1e-9))) if t_max > 0 else 0
    ts = np.linspace(0.0, t_max, n_steps + 1)
    model = spec.model
    aux = {}
    if model is Model.MARY:
        if spec.m != 3:
            raise ValueError("the grid solver covers m-ary search trees only for m = 3")
        ps, gs = _march_mary3(ts, relaxation, initial)
        aux["g"] = gs
    else:
        ps = _march(spec, ts, relaxation, initial)
    params = {"model": model.value, **spec.params(), "step": float(step)}
    return PFunction("grid", spec.alpha, params, grid_t=ts, grid_p=ps, aux=aux)


def _iterate(update, start: float, relaxation: float) -> float:
    x = start
    for _ in range(MAX_ITERATIONS):
        new = (1.0 - relaxation) * x + relaxation * update(x)
        if abs(new - x) <= ITERATION_TOL:
            return new
        x = new
    raise FixedPointError(f"knot iteration did not converge in {MAX_ITERATIONS} steps")


def _start(initial: str, previous: float) -> float:
    return {"previous": previous, "upper": 1.0, "lower": 0.0}[initial]


def _march(spec: ModelSpec, ts: np.ndarray, relaxation: float, initial: str) -> np.ndarray:
    model = spec.model
    if model is Model.RRT:
        b = 0.0

        def source(p):
            return p

        def close(t, k):
            return math.exp(-k)

    elif model is Model.BST:
        b = 1.0

        def source(p):
            return p

        def close(t, k):
            return (1.0 - k) ** 2

    elif model is Model.PA:
        b = spec.rho
        rho = spec.rho
        expo = spec.chi_prime + 1.0

        def source(p):
            return (1.0 - p) * max(p, 0.0) ** expo

        def close(t, k):
            return math.exp(-rho * t) + rho * k

    elif model is Model.XBST:
        b = 1.0

        def source(p):
            return (1.0 - p) ** 2

        def close(t, k):
            return math.exp(-t) + k

    else:
        raise ValueError(f"unsupported model {model!r}")

    ps = np.empty(ts.size)
    ps[0] = 1.0
    k_prev = 0.0
    f_prev = source(1.0)
    for i in range(1, ts.size):
        t = ts[i]
        h = t - ts[i - 1]
        decay = math.exp(-b * h)
        base = decay * (k_prev + 0.5 * h * f_prev)
        half = 0.5 * h

        def update(p, t=t, base=base, half=half):
            return close(t, base + half * source(p))

        p = _iterate(update, _start(initial, ps[i - 1]), relaxation)
        ps[i] = p
        f_prev = source(p)
        k_prev = base + half * f_prev
    return ps


def _march_mary3(ts: np.ndarray, relaxation: float, initial: str) -> tuple[np.ndarray, np.ndarray]:
    ps = np.empty(ts.size)
    gs = np.empty(ts.size)
    ps[0] = gs[0] = 1.0
    j_prev = 0.0  # e^{-t} int e^u p
    l_prev = 0.0  # e^{-2t} int e^{2u} g^3
    for i in range(1, ts.size):
        t = ts[i]
        h = t - ts[i - 1]
        half = 0.5 * h
        j_base = math.exp(-h) * (j_prev + half * ps[i - 1])
        l_base = math.exp(-2.0 * h) * (l_prev + half * gs[i - 1] ** 3)
        e2t = math.exp(-2.0 * t)

        def update(p, j_base=j_base, l_base=l_base, e2t=e2t, half=half):
            g = 1.0 - (j_base + half * p)
            return e2t + 2.0 * (l_base + half * g**3)

        p = _iterate(update, _start(initial, ps[i - 1]), relaxation)
        j_prev = j_base + half * p
        g = 1.0 - j_prev
        l_prev = l_base + half * g**3
        ps[i] = p
        gs[i] = g
    return ps, gs
