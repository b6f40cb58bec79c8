"""Model descriptions for the five tree families and their Malthusian parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np


class Model(str, Enum):
    RRT = "rrt"
    BST = "bst"
    PA = "pa"
    XBST = "xbst"
    MARY = "mary"


class SizeMode(str, Enum):
    ALL = "all_nodes"
    INTERNAL = "internal_nodes"
    EXTERNAL = "external_nodes"


class NoMalthusianRoot(ValueError):
    """Raised when the reproduction measure has total mass at most one."""


def _is_positive_integer(x: float, eps: float = 1e-9) -> bool:
    return x > 0.5 and abs(x - round(x)) < eps


@dataclass(frozen=True)
class ModelSpec:
    """One of the five random-tree models together with its parameters.

    Only the parameters relevant to ``model`` are meaningful: ``chi``, ``rho``
    and ``root_rate_lambda`` for preferential attachment, ``m`` for m-ary
    search trees and ``size_mode`` for extended binary search trees.
    """

    model: Model
    chi: float = 0.0
    rho: float = 1.0
    m: int = 3
    size_mode: SizeMode = SizeMode.ALL
    root_rate_lambda: Optional[float] = None
    alpha: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "size_mode", SizeMode(self.size_mode))
        if self.model is Model.PA:
            if not self.rho > 0:
                raise ValueError("preferential attachment needs rho > 0")
            if self.chi < 0 and not _is_positive_integer(self.rho / -self.chi):
                raise ValueError("with chi < 0, rho/|chi| must be a positive integer")
            if self.chi < 0 and round(self.rho / -self.chi) < 2:
                raise ValueError("rho/|chi| = 1 gives exactly one child per node (E N = 1)")
            lam = self.root_rate_lambda
            if lam is not None:
                if not lam > 0:
                    raise ValueError("root_rate_lambda must be positive")
                if self.chi < 0 and not _is_positive_integer(lam / -self.chi):
                    raise ValueError("with chi < 0, root_rate_lambda/|chi| must be a positive integer")
        elif self.root_rate_lambda is not None:
            raise ValueError("root_rate_lambda only applies to preferential attachment")
        if self.model is Model.MARY and (int(self.m) != self.m or self.m < 3):
            raise ValueError("m-ary search trees need an integer m >= 3")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "alpha", malthusian_alpha(self))

    @classmethod
    def rrt(cls) -> "ModelSpec":
        return cls(Model.RRT)

    @classmethod
    def bst(cls) -> "ModelSpec":
        return cls(Model.BST)

    @classmethod
    def pa(cls, chi: float = 1.0, rho: float = 1.0, root_rate_lambda: float | None = None) -> "ModelSpec":
        return cls(Model.PA, chi=float(chi), rho=float(rho), root_rate_lambda=root_rate_lambda)

    @classmethod
    def xbst(cls, size_mode: SizeMode | str = SizeMode.ALL) -> "ModelSpec":
        return cls(Model.XBST, size_mode=SizeMode(size_mode))

    @classmethod
    def mary(cls, m: int = 3) -> "ModelSpec":
        return cls(Model.MARY, m=m)

    @property
    def chi_prime(self) -> float:
        return self.chi / self.rho

    @property
    def root_rate(self) -> float:
        """Base birth rate of the root (PA only); differs from rho in the modified process."""
        return self.rho if self.root_rate_lambda is None else float(self.root_rate_lambda)

    def params(self) -> dict:
        if self.model is Model.PA:
            out = {"chi": self.chi, "rho": self.rho}
            if self.root_rate_lambda is not None:
                out["root_rate_lambda"] = self.root_rate_lambda
            return out
        if self.model is Model.MARY:
            return {"m": self.m}
        if self.model is Model.XBST:
            return {"size_mode": self.size_mode.value}
        return {}

    def label(self) -> str:
        p = self.params()
        if not p:
            return self.model.value
        inner = ",".join(f"{k}={v}" for k, v in p.items())
        return f"{self.model.value}({inner})"


def laplace_mu(spec: ModelSpec, a: float) -> float:
    """Laplace transform of the mean reproduction measure, ``int e^{-a t} mu(dt)``."""
    if a <= 0:
        return math.inf
    model = spec.model
    if model is Model.RRT:
        return 1.0 / a
    if model in (Model.BST, Model.XBST):
        return 2.0 / (1.0 + a)
    if model is Model.PA:
        # Expected children by age s solve m' = chi*m + rho, so mu(ds) = rho e^{chi s} ds.
        if a <= spec.chi:
            return math.inf
        return spec.rho / (a - spec.chi)
    if model is Model.MARY:
        # m children at S + X_i, S a sum of Exp(i), i = 2..m-1, and X_i ~ Exp(1).
        value = spec.m / (1.0 + a)
        for i in range(2, spec.m):
            value *= i / (i + a)
        return value
    raise ValueError(f"unknown model {model!r}")


def solve_malthusian(laplace: Callable[[float], float], lower: float = 0.0, tol: float = 1e-12) -> float:
    """Solve ``laplace(alpha) = 1`` for a decreasing transform by bisection.

    Raises
    ------
    NoMalthusianRoot
        If the transform does not exceed 1 just above ``lower`` (total mean
        offspring at most one).
    """
    lo = lower
    probe = lo + 1e-12 * max(1.0, abs(lo))
    if not laplace(probe) > 1.0:
        raise NoMalthusianRoot("expected offspring <= 1: no Malthusian parameter")
    hi = max(1.0, 2.0 * abs(lo) + 1.0)
    while laplace(hi) > 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise NoMalthusianRoot("transform does not drop below 1")
    lo = probe
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if laplace(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def malthusian_alpha(spec: ModelSpec, method: str = "closed") -> float:
    """Malthusian parameter of the model.

    ``method="closed"`` returns the known value (1 for RRT, BST, XBST and
    m-ary trees, ``chi + rho`` for preferential attachment);
    ``method="bisection"`` solves the defining equation numerically.
    """
    if method == "bisection":
        lower = max(spec.chi, 0.0) if spec.model is Model.PA else 0.0
        return solve_malthusian(lambda a: laplace_mu(spec, a), lower=lower)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    if spec.model is Model.PA:
        return spec.chi + spec.rho
    return 1.0


# -- random streams ----------------------------------------------------------

_MASK64 = (1 << 64) - 1


def make_rng(seed, *stream: int) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, *stream)``.

    ``seed`` may already be a ``numpy.random.Generator``, in which case it is
    returned unchanged (and ``stream`` must be empty).
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("cannot derive a sub-stream from a Generator")
        return seed
    if seed is None:
        seed = 0
    key = [int(seed) & _MASK64, *(int(s) & _MASK64 for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def exponential(rng: np.random.Generator, rate, size=None):
    """Exp(rate) variates through ``-log(1 - u) / rate`` with ``u`` in [0, 1)."""
    u = rng.random(size)
    return -np.log1p(-u) / rate
