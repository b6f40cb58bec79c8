"""Root-essential probabilities p(t) and limiting fractions nu for each model.

``p(t)`` is the probability that the root of the family tree at time ``t`` is
essential, and ``nu = alpha * int_0^inf e^{-alpha t} p(t) dt`` is the limit of
``I(T_n) / |T_n|``.
"""

from __future__ import annotations

import bisect
import csv
import dataclasses
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .models import Model, ModelSpec
from .numerics import adaptive_simpson, hermite_interpolate, rk4

PHI = (1.0 + math.sqrt(5.0)) / 2.0
SQRT5 = math.sqrt(5.0)
GAMMA_PLUS = (-1.0 + SQRT5) / 2.0
GAMMA_MINUS = (-1.0 - SQRT5) / 2.0

# Quadrature and root-finding never go closer than this to the singular point q.
PSI_EDGE = 1e-13
NU_TAIL = 1e-10

KINDS = ("closed_rrt", "closed_bst", "closed_xbst", "psi_inverse_pa", "ode_mary3", "grid")
METHODS = ("quadrature", "series", "closed_form")


@dataclass(frozen=True)
class NuResult:
    nu: float
    method: str
    abs_error_estimate: float
    model: Optional[str] = None
    params: dict = field(default_factory=dict)
    cross_check: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "nu": self.nu,
            "method": self.method,
            "abs_error_estimate": self.abs_error_estimate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NuResult":
        d = json.loads(text)
        return cls(
            nu=d["nu"],
            method=d["method"],
            abs_error_estimate=d["abs_error_estimate"],
            model=d.get("model"),
            params=d.get("params") or {},
        )


@dataclass(frozen=True)
class PFunction:
    """Evaluator for ``p(t)`` on ``t >= 0``.

    Closed-form and Psi-inverse kinds evaluate through ``evaluator``; grid
    kinds interpolate linearly between knots and refuse ``t`` past the last
    knot.
    """

    kind: str
    alpha: float
    params: dict = field(default_factory=dict)
    grid_t: Optional[np.ndarray] = None
    grid_p: Optional[np.ndarray] = None
    nu: Optional[NuResult] = None
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)
    aux: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown PFunction kind {self.kind!r}")
        if self.evaluator is None and self.grid_t is None:
            raise ValueError("PFunction needs an evaluator or a grid")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("p(t) is defined for t >= 0")
        if self.evaluator is not None:
            out = self.evaluator(arr)
        else:
            if np.any(arr > self.t_max * (1 + 1e-12)):
                raise ValueError(f"t beyond the solved range [0, {self.t_max}]")
            out = np.interp(arr, self.grid_t, self.grid_p)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def t_max(self) -> float:
        return math.inf if self.grid_t is None else float(self.grid_t[-1])

    def with_nu(self, nu: NuResult) -> "PFunction":
        return dataclasses.replace(self, nu=nu)

    def to_csv(self, target=None) -> str:
        """Write the knot table as ``t,p`` CSV; returns the text."""
        if self.grid_t is None:
            raise ValueError("this PFunction has no grid to export")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "p"])
        for t, p in zip(self.grid_t.tolist(), self.grid_p.tolist()):
            writer.writerow([repr(t), repr(p)])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(os.fspath(target), "w", encoding="ascii") as fh:
                    fh.write(text)
        return text


def read_grid_csv(source, alpha: float = 1.0, params: dict | None = None) -> PFunction:
    text = source.read() if hasattr(source, "read") else open(os.fspath(source), encoding="ascii").read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["t", "p"]:
        raise ValueError("expected a 't,p' header")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return PFunction("grid", alpha, dict(params or {}), grid_t=data[:, 0], grid_p=data[:, 1])


# -- random recursive tree -------------------------------------------------------


def p_rrt(t):
    return 1.0 / (1.0 + np.asarray(t, dtype=float))


# -- binary search tree ----------------------------------------------------------


def g_bst(t):
    """Square root of the BST p(t); solves g' = 1 - g - g^2 with g(0) = 1."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-SQRT5 * t)
    num = GAMMA_PLUS * (1.0 - GAMMA_MINUS) - GAMMA_MINUS * (1.0 - GAMMA_PLUS) * decay
    den = (1.0 - GAMMA_MINUS) - (1.0 - GAMMA_PLUS) * decay
    return num / den


def p_bst(t):
    return g_bst(t) ** 2


def nu_bst(mode: str = "series", terms: int | None = None) -> NuResult:
    """Limiting independence fraction of the binary search tree.

    ``mode="series"`` sums the geometric series (stopping when a term drops
    below 1e-12 and the tail bound below 1e-10, or after ``terms`` terms);
    ``mode="quadrature"`` integrates the ``x = e^{-t}`` form on ``[0, 1]``.
    """
    if mode == "series":
        total, k = 0.0, 0
        while True:
            term = bst_series_term(k)
            total += term
            # Later term ratios are at most ratio, so the tail is geometric.
            ratio = (k + 2) / (k + 1) * PHI**-4
            tail = term * ratio / (1.0 - ratio)
            k += 1
            if terms is not None:
                if k >= terms:
                    break
            elif abs(term) < 1e-12 and tail < 1e-10:
                break
        return NuResult(total, "series", tail, model="bst")
    if mode == "quadrature":
        c1, c2 = PHI**-1, PHI**-2

        def integrand(x):
            y = x**SQRT5
            return ((PHI + c1 * y) / (PHI**2 - c2 * y)) ** 2

        value, err = adaptive_simpson(integrand, 0.0, 1.0, tol=1e-12)
        return NuResult(value, "quadrature", err, model="bst")
    raise ValueError(f"unknown mode {mode!r}")


def bst_series_term(k: int) -> float:
    return (k + 1) * PHI ** (-4 * k - 6) * (
        PHI**4 / (k * SQRT5 + 1) + 2 * PHI**2 / ((k + 1) * SQRT5 + 1) + 1 / ((k + 2) * SQRT5 + 1)
    )


# -- extended binary search tree -------------------------------------------------


def p_xbst(t):
    t = np.asarray(t, dtype=float)
    decay = np.exp(-SQRT5 * t)
    return (1.0 + PHI**2 * decay) / (PHI**2 + decay)


def xbst_series_partial_sums(n_terms: int) -> np.ndarray:
    k = np.arange(n_terms)
    terms = (-1.0) ** k * PHI ** (-2.0 - 2.0 * k) / (k * SQRT5 + 1.0)
    return PHI**2 - (3 * PHI + 1) * np.cumsum(terms)


def nu_xbst(mode: str = "series") -> NuResult:
    """Extended BST limit: alternating series, cross-checked by quadrature in ``t``."""
    series_val, series_err = _xbst_series()
    quad_val, quad_err = _nu_quadrature(lambda t: float(p_xbst(t)), 1.0)
    if mode == "series":
        return NuResult(series_val, "series", series_err, model="xbst", cross_check=quad_val)
    if mode == "quadrature":
        return NuResult(quad_val, "quadrature", quad_err, model="xbst", cross_check=series_val)
    raise ValueError(f"unknown mode {mode!r}")


def _xbst_series() -> tuple[float, float]:
    total, k = 0.0, 0
    scale = 3 * PHI + 1
    while True:
        term = (-1) ** k * PHI ** (-2 - 2 * k) / (k * SQRT5 + 1)
        total += term
        k += 1
        nxt = scale * PHI ** (-2 - 2 * k) / (k * SQRT5 + 1)
        if nxt < 1e-13:
            break
    # Alternating with decreasing terms: the error is below the first omitted term.
    return PHI**2 - scale * total, nxt


# -- preferential attachment -----------------------------------------------------


def h_pa(x, chi_prime: float):
    x = np.asarray(x, dtype=float)
    return x - x ** (chi_prime + 1.0) + x ** (chi_prime + 2.0)


def largest_zero_q(chi_prime: float) -> float:
    """Largest zero of ``h`` in ``[0, 1]``: 0 when ``chi_prime >= 0``."""
    if chi_prime <= -1:
        raise ValueError("chi_prime must exceed -1")
    if chi_prime >= 0:
        return 0.0
    c = chi_prime
    # h(x)/x = 1 - x^c (1 - x) is increasing on (0, 1), negative near 0, 1 at 1.
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if 1.0 - mid**c * (1.0 - mid) < 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    # Newton polish to full precision; Psi near q is sensitive to every bit of q.
    for _ in range(3):
        k = 1.0 - x**c * (1.0 - x)
        dk = x**c - c * x ** (c - 1.0) * (1.0 - x)
        x -= k / dk
    return x


class HFunction:
    """``h(x) = x - x^{chi'+1} + x^{chi'+2}`` evaluated without cancellation near ``q``.

    :meth:`at_offset` takes ``d = x - q`` directly.  For ``q > 0`` it uses
    ``q^{chi'} (1 - q) = 1``, so ``h(q + d) = -(q + d) expm1(L)`` with
    ``L = chi' log1p(d/q) + log1p(-d/(1-q))``, keeping full relative
    precision arbitrarily close to ``q``.  Accepts scalars or arrays.
    """

    def __init__(self, chi_prime: float):
        self.chi_prime = float(chi_prime)
        self.q = largest_zero_q(chi_prime)
        self._a = self.chi_prime + 1.0

    def __call__(self, x):
        return self.at_offset(np.asarray(x, dtype=float) - self.q)

    def at_offset(self, d):
        q = self.q
        if q > 0:
            with np.errstate(divide="ignore"):  # d = 1 - q gives log1p(-1) = -inf, h = 1
                log_k = self.chi_prime * np.log1p(d / q) + np.log1p(-d / (1.0 - q))
            return -(q + d) * np.expm1(log_k)
        x = d
        return x - x**self._a + x ** (self._a + 1.0)


def _log_integrand(h: HFunction) -> Callable:
    # int dx / h(x) with x = q + e^u: the integrand e^u / h(q + e^u) is smooth in u.
    def f(u):
        d = np.exp(u)
        return d / h.at_offset(d)

    return f


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gauss(f: Callable, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    return float(half * np.dot(_GL_WEIGHTS, f(0.5 * (a + b) + half * _GL_NODES)))


def psi_pa(x: float, chi_prime: float) -> float:
    """``Psi(x) = int_x^1 dy / h(y)`` by direct adaptive quadrature."""
    h = HFunction(chi_prime)
    if not h.q < x <= 1.0:
        raise ValueError(f"Psi is defined on ({h.q}, 1], got {x}")
    if x == 1.0:
        return 0.0
    lo = math.log(max(x - h.q, PSI_EDGE))
    f = _log_integrand(h)
    value, _ = adaptive_simpson(lambda u: float(f(u)), lo, math.log(1.0 - h.q), tol=1e-13, rel_tol=1e-14)
    return value


class PsiTable:
    """Psi(x) with precomputed values at anchors accumulating toward ``q``.

    Anchors sit at ``q + (1 - q) * r**j`` down to ``q + 1e-13``; ``Psi``
    between anchors is the anchor value plus one 16-point Gauss-Legendre
    rule in ``log(x - q)`` (pieces are short, the integrand smooth), and the
    inverse is a bracketed Newton iteration (``Psi' = -1/h``) with bisection
    fallback.
    """

    def __init__(self, chi_prime: float, ratio: float = 0.9):
        self.h = HFunction(chi_prime)
        self.chi_prime = self.h.chi_prime
        self.q = self.h.q
        self._f = _log_integrand(self.h)
        top = math.log(1.0 - self.q)
        bottom = math.log(PSI_EDGE)
        step = math.log(ratio)
        us = [top]
        while us[-1] + step > bottom:
            us.append(top + step * len(us))
        us.append(bottom)
        values = [0.0]
        for j in range(1, len(us)):
            piece = _gauss(self._f, us[j], us[j - 1])
            values.append(values[-1] + piece)
        self.log_offsets = us  # decreasing
        self.anchors = [1.0] + [self.q + math.exp(u) for u in us[1:]]
        self.values = values  # increasing
        self._neg_us = [-u for u in us]

    @property
    def lower(self) -> float:
        return self.anchors[-1]

    def _psi_log(self, u: float) -> tuple[float, int]:
        u = max(u, self.log_offsets[-1])
        j = bisect.bisect_right(self._neg_us, -u) - 1
        top = self.log_offsets[j]
        if top == u:
            return self.values[j], j
        piece = _gauss(self._f, u, top)
        return self.values[j] + piece, j

    def psi(self, x: float) -> float:
        if not self.q < x <= 1.0:
            raise ValueError(f"Psi is defined on ({self.q}, 1], got {x}")
        if x == 1.0:
            return 0.0
        return self._psi_log(math.log(x - self.q))[0]

    def psi_offset(self, d: float) -> float:
        """Psi at ``q + d``, for ``d`` too small to add to ``q`` exactly."""
        return self._psi_log(math.log(d))[0]

    def psi_lower_bound_log(self, u: float) -> float:
        u = max(u, self.log_offsets[-1])
        return self.values[bisect.bisect_right(self._neg_us, -u) - 1]

    def inverse(self, s: float) -> float:
        """The ``x`` in ``(q, 1]`` with ``Psi(x) = s``, clamped at ``q + 1e-13``."""
        if s <= 0:
            return 1.0
        j = bisect.bisect_left(self.values, s)
        if j >= len(self.values):
            return self.lower
        # Solve in u = log(x - q); dPsi/du = -e^u / h(q + e^u).
        hi, lo = self.log_offsets[j - 1], self.log_offsets[j]
        s_hi, s_lo = self.values[j - 1], self.values[j]
        if s == s_lo:
            return self.anchors[j]
        u = hi + (lo - hi) * (s - s_hi) / (s_lo - s_hi)
        for _ in range(200):
            f = self._psi_log(u)[0] - s
            if f > 0:
                lo = u
            else:
                hi = u
            newton = u + f / self._f(u)
            nxt = newton if lo < newton < hi else 0.5 * (lo + hi)
            if abs(nxt - u) <= 1e-15 or hi - lo <= 1e-15:
                u = nxt
                break
            u = nxt
        return self.q + math.exp(u)


def pa_p_function(chi: float, rho: float) -> PFunction:
    """p(t) = Psi^{-1}(rho t) for preferential attachment."""
    table = PsiTable(chi / rho)

    def evaluate(t):
        flat = np.atleast_1d(t).ravel()
        out = np.array([table.inverse(rho * float(s)) for s in flat])
        return out.reshape(np.shape(t))

    return PFunction(
        "psi_inverse_pa",
        chi + rho,
        {"chi": chi, "rho": rho},
        evaluator=evaluate,
        aux={"table": table},
    )


def p_pa(t, chi: float, rho: float):
    return pa_p_function(chi, rho)(t)


def nu_pa(chi: float, rho: float) -> NuResult:
    """``nu = 1 - int_q^1 exp(-(chi'+1) Psi(x)) dx``.

    For ``chi >= 0`` the alternative form
    ``(chi'+1) int_q^1 exp(-(chi'+1) Psi(x)) x / h(x) dx`` is evaluated as a
    cross-check; for ``chi < 0`` its integrand is singular at ``q``.
    Both integrals run over ``u = log(x - q)`` from ``log(1e-13)``.
    """
    table = PsiTable(chi / rho)
    c = table.chi_prime + 1.0
    q = table.q
    lo, hi = table.log_offsets[-1], table.log_offsets[0]

    def weight(u: float) -> float:
        # exp(-c Psi) * dx/du; Psi grows without bound toward q.
        if c * table.psi_lower_bound_log(u) > 745.0:
            return 0.0
        return math.exp(-c * table._psi_log(u)[0] + u)

    integral, err = adaptive_simpson(weight, lo, hi, tol=1e-12)
    cross = None
    if chi >= 0:

        def alt(u: float) -> float:
            d = math.exp(u)
            return c * weight(u) * (q + d) / table.h.at_offset(d)

        cross, _ = adaptive_simpson(alt, lo, hi, tol=1e-12)
    return NuResult(
        1.0 - integral,
        "quadrature",
        err + PSI_EDGE,
        model="pa",
        params={"chi": chi, "rho": rho},
        cross_check=cross,
    )


# -- ternary search tree -----------------------------------------------------------


def _mary3_rhs(t, y):
    g, p, _ = y
    return np.array([1.0 - g - p, -2.0 * p + 2.0 * g**3, math.exp(-t) * p])


def solve_mary3(step: float = 0.1, tol: float = 1e-9, max_halvings: int = 14) -> tuple[PFunction, NuResult]:
    """Integrate ``g' = 1 - g - p``, ``p' = -2p + 2g^3``, ``nu' = e^{-t} p``.

    Starts from ``g = p = 1``, ``nu = 0`` and runs RK4 to the horizon where
    ``e^{-t} < 1e-12``, halving the step until successive runs agree in ``nu``
    and in ``p`` at the shared knots to ``tol``.
    """
    t_end = math.log(1e12)
    n_steps = int(math.ceil(t_end / step))
    prev = None
    for _ in range(max_halvings):
        step = t_end / n_steps
        ts, ys = rk4(_mary3_rhs, [1.0, 1.0, 0.0], t_end, step)
        if prev is not None:
            diff_nu = abs(ys[-1, 2] - prev[-1, 2])
            diff_p = np.max(np.abs(ys[::2, 1] - prev[:, 1]))
            if max(diff_nu, diff_p) < tol:
                break
        prev = ys
        n_steps *= 2
    else:
        raise ArithmeticError("RK4 step control did not converge for the ternary tree system")
    g, p = ys[:, 0], ys[:, 1]
    dg = 1.0 - g - p
    dp = -2.0 * p + 2.0 * g**3
    nu = NuResult(
        float(ys[-1, 2]),
        "quadrature",
        float(diff_nu + math.exp(-t_end)),
        model="mary",
        params={"m": 3},
    )

    def evaluate(t):
        if np.any(np.asarray(t) > t_end):
            raise ValueError(f"t beyond the solved range [0, {t_end}]")
        return hermite_interpolate(ts, p, dp, t)

    pf = PFunction(
        "ode_mary3",
        1.0,
        {"m": 3, "step": step},
        grid_t=ts,
        grid_p=p,
        nu=nu,
        evaluator=evaluate,
        aux={"g": g, "dg": dg, "dp": dp},
    )
    return pf, nu


def g_mary3(pf: PFunction, t):
    return hermite_interpolate(pf.grid_t, pf.aux["g"], pf.aux["dg"], t)


# -- generic nu --------------------------------------------------------------------


def _nu_quadrature(p: Callable[[float], float], alpha: float) -> tuple[float, float]:
    t_end = (math.log(1.0 / NU_TAIL) + 0.01) / alpha
    value, err = adaptive_simpson(lambda t: alpha * math.exp(-alpha * t) * p(t), 0.0, t_end, tol=1e-11)
    return value, err + math.exp(-alpha * t_end)


def nu_from_p(p: PFunction) -> NuResult:
    """``nu = alpha * int_0^inf e^{-alpha t} p(t) dt`` for any PFunction.

    Grids are integrated exactly as piecewise-linear functions, with the part
    beyond the last knot bounded by ``e^{-alpha t_max}`` (``0 < p <= 1``).
    """
    alpha = p.alpha
    params = dict(p.params)
    if p.kind == "grid":
        t, y = p.grid_t, p.grid_p
        e = np.exp(-alpha * t)
        slope = np.diff(y) / np.diff(t)
        dt = np.diff(t)
        pieces = y[:-1] * (e[:-1] - e[1:]) + slope * (-dt * e[1:] + (e[:-1] - e[1:]) / alpha)
        body = float(np.sum(pieces))
        tail = float(e[-1])
        return NuResult(float(body + y[-1] * tail), "quadrature", tail, model=params.get("model"), params=params)
    value, err = _nu_quadrature(lambda s: float(p(s)), alpha)
    return NuResult(value, "quadrature", err, params=params)


def closed_form_p(spec: ModelSpec) -> PFunction:
    """The model's dedicated p(t) evaluator (closed form, Psi-inverse or ODE)."""
    if spec.model is Model.RRT:
        return PFunction("closed_rrt", 1.0, evaluator=p_rrt)
    if spec.model is Model.BST:
        return PFunction("closed_bst", 1.0, evaluator=p_bst)
    if spec.model is Model.XBST:
        return PFunction("closed_xbst", 1.0, evaluator=p_xbst)
    if spec.model is Model.PA:
        return pa_p_function(spec.chi, spec.rho)
    if spec.model is Model.MARY:
        if spec.m != 3:
            raise ValueError("p(t) is only solved analytically for m = 3")
        return solve_mary3()[0]
    raise ValueError(f"unknown model {spec.model!r}")


def solve_nu(spec: ModelSpec) -> NuResult:
    """The model's dedicated nu routine."""
    model = spec.model
    if model is Model.RRT:
        value, err = _nu_quadrature(lambda t: 1.0 / (1.0 + t), 1.0)
        return NuResult(value, "quadrature", err, model="rrt")
    if model is Model.BST:
        return nu_bst("series")
    if model is Model.PA:
        return nu_pa(spec.chi, spec.rho)
    if model is Model.XBST:
        return dataclasses.replace(nu_xbst("series"), params=spec.params())
    if model is Model.MARY:
        if spec.m != 3:
            raise ValueError("no analytic nu for m >= 4; estimate it with fringe sampling")
        return solve_mary3()[1]
    raise ValueError(f"unknown model {model!r}")


def analytic_nu(spec: ModelSpec) -> float | None:
    """Analytic nu when one is available (None for m-ary trees with m >= 4)."""
    if spec.model is Model.MARY and spec.m != 3:
        return None
    return solve_nu(spec).nu
