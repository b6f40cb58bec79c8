import math

import numpy as np
import pytest

from cmjtrees.models import (
    Model,
    ModelSpec,
    NoMalthusianRoot,
    SizeMode,
    exponential,
    laplace_mu,
    make_rng,
    malthusian_alpha,
    solve_malthusian,
)

SPECS = [
    ModelSpec.rrt(),
    ModelSpec.bst(),
    ModelSpec.pa(1.0, 1.0),
    ModelSpec.pa(0.0, 1.0),
    ModelSpec.pa(2.0, 0.5),
    ModelSpec.pa(-0.5, 1.0),
    ModelSpec.pa(-1.0, 3.0),
    ModelSpec.xbst(),
    ModelSpec.mary(3),
    ModelSpec.mary(5),
]


def test_closed_form_alphas():
    assert ModelSpec.rrt().alpha == 1
    assert ModelSpec.bst().alpha == 1
    assert ModelSpec.pa(1, 1).alpha == 2
    assert ModelSpec.xbst().alpha == 1
    assert ModelSpec.mary(3).alpha == 1


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_bisection_matches_closed_form(spec):
    assert malthusian_alpha(spec, "bisection") == pytest.approx(spec.alpha, abs=1e-10)
    assert laplace_mu(spec, spec.alpha) == pytest.approx(1.0, abs=1e-12)


def test_bst_transform_oracle():
    assert solve_malthusian(lambda a: 2 / (1 + a)) == pytest.approx(1.0, abs=1e-11)


def test_no_root_when_at_most_one_child():
    with pytest.raises(NoMalthusianRoot):
        solve_malthusian(lambda a: 1.0 / (1.0 + a))


def test_unknown_method():
    with pytest.raises(ValueError):
        malthusian_alpha(ModelSpec.rrt(), "newton")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(model=Model.PA, rho=0.0),
        dict(model=Model.PA, chi=-0.3, rho=1.0),  # rho/|chi| not an integer
        dict(model=Model.PA, chi=-1.0, rho=1.0),  # one child only
        dict(model=Model.PA, chi=-0.5, rho=1.0, root_rate_lambda=0.7),
        dict(model=Model.PA, root_rate_lambda=-1.0),
        dict(model=Model.RRT, root_rate_lambda=2.0),
        dict(model=Model.MARY, m=2),
        dict(model=Model.MARY, m=3.5),
        dict(model="tree"),
        dict(model=Model.XBST, size_mode="leaves"),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        ModelSpec(**kwargs)


def test_spec_helpers():
    pa = ModelSpec.pa(1.0, 2.0, root_rate_lambda=4.0)
    assert pa.chi_prime == 0.5
    assert pa.root_rate == 4.0
    assert pa.params() == {"chi": 1.0, "rho": 2.0, "root_rate_lambda": 4.0}
    assert ModelSpec.pa().root_rate == 1.0
    assert ModelSpec.xbst("internal_nodes").size_mode is SizeMode.INTERNAL
    assert ModelSpec.mary(4).label() == "mary(m=4)"
    assert ModelSpec.rrt().label() == "rrt"
    assert ModelSpec.rrt() == ModelSpec(Model.RRT)


def test_rng_streams_are_reproducible_and_distinct():
    a = make_rng(7, 3).random(5)
    b = make_rng(7, 3).random(5)
    c = make_rng(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    g = make_rng(1)
    assert make_rng(g) is g
    with pytest.raises(ValueError):
        make_rng(g, 1)
    # negative and oversized seeds are folded into 64 bits
    make_rng(-1).random()
    make_rng(2**70).random()


def test_exponential_mean_and_positivity():
    x = exponential(make_rng(0), 2.0, 200_000)
    assert np.all(x >= 0) and np.all(np.isfinite(x))
    assert abs(x.mean() - 0.5) < 4 * 0.5 / math.sqrt(x.size)
