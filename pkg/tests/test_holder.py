import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyschauder.corpus import AbsKink, Constant, Cosine, GaussianBump, Weierstrass
from levyschauder.errors import DegenerateFit, MissingDerivative, OutOfDomain
from levyschauder.holder import (
    check_norm_equivalence,
    dyadic_scales,
    equivalent_norm,
    floor_order,
    holder_exponent_estimate,
    iterated_difference,
    strict_floor,
    zygmund_norm,
)
from levyschauder.spectral_grid import GridField, GridSpec

X = np.linspace(-1.0, 1.0, 2001)
HS = dyadic_scales(0, 10)


def test_floors():
    assert floor_order(1.5) == 1 and floor_order(2.0) == 2
    assert strict_floor(2.0) == 1 and strict_floor(1.5) == 1 and strict_floor(0.5) == 0


# iterated differences -----------------------------------------------------------------


@given(st.floats(-5, 5), st.floats(1e-3, 2.0))
@settings(max_examples=50, deadline=None)
def test_second_difference_of_square(x, h):
    assert iterated_difference(lambda y: y * y, x, h, 2) == pytest.approx(2 * h * h, rel=1e-9,
                                                                          abs=1e-12)


@given(st.floats(-5, 5), st.floats(1e-3, 2.0), st.floats(-3, 3), st.floats(-3, 3),
       st.integers(2, 5))
@settings(max_examples=50, deadline=None)
def test_differences_annihilate_low_degree_polynomials(x, h, a, b, j):
    val = iterated_difference(lambda y: a * y + b, x, h, j)
    scale = abs(a) * (abs(x) + j * h) + abs(b) + 1.0
    assert abs(val) <= 1e-12 * scale * 2**j


def test_centered_second_difference_of_abs():
    assert iterated_difference(lambda y: np.abs(y), 0.0, 0.25, 2, centered=True) == pytest.approx(0.5)


def test_grid_difference_periodic_and_out_of_domain():
    sp = GridSpec(1, 256, 4.0)
    f = GridField.from_function(sp, lambda p: p[..., 0] ** 2)
    h = 4 * sp.spacing
    assert iterated_difference(f, 0.0, h, 2) == pytest.approx(2 * h * h)
    with pytest.raises(OutOfDomain):
        iterated_difference(f, sp.axis()[-2], h, 2, periodic=False)


def test_grid_difference_needs_lattice_step():
    sp = GridSpec(1, 256, 4.0)
    f = GridField.from_function(sp, lambda p: p[..., 0])
    with pytest.raises(ValueError):
        iterated_difference(f, 0.0, 0.3 * sp.spacing, 2)


# norms ------------------------------------------------------------------------------


def test_abs_kink_seminorm_is_two():
    rep = zygmund_norm(AbsKink(), 1.0, HS, X)
    assert rep.seminorm == pytest.approx(2.0, rel=1e-2)
    assert rep.total >= rep.sup_norm
    rep_env = zygmund_norm(AbsKink(envelope=4.0), 1.0, HS, X)
    assert rep_env.seminorm == pytest.approx(2.0, rel=1e-2)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
def test_constant_has_zero_seminorm(alpha):
    rep = zygmund_norm(Constant(-3.0), alpha, HS, X)
    assert rep.sup_norm == 3.0 and rep.seminorm == 0.0


def test_cosine_norm_stable_under_refinement():
    vals = [zygmund_norm(GridField.from_function(GridSpec(1, n, 4 * math.pi), np.cos), 1.5,
                         HS).total for n in (1024, 2048)]
    assert vals[1] == pytest.approx(vals[0], rel=0.05)
    assert all(math.isfinite(v) for v in vals)


@given(st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3))
@settings(max_examples=20, deadline=None)
def test_norm_homogeneity(c):
    f = GaussianBump(0.0, 0.4)
    base = zygmund_norm(f, 0.7, HS, X)
    scaled = zygmund_norm(lambda y: c * f(y), 0.7, HS, X)
    assert scaled.seminorm == pytest.approx(abs(c) * base.seminorm, rel=1e-12)
    assert scaled.sup_norm == pytest.approx(abs(c) * base.sup_norm, rel=1e-12)


def test_more_samples_never_decrease_seminorm():
    f = Weierstrass(terms=10)
    coarse = zygmund_norm(f, 0.5, HS, X[::10])
    fine = zygmund_norm(f, 0.5, HS, X)
    assert fine.seminorm >= coarse.seminorm


def test_smooth_function_seminorm_attained_at_coarse_scales():
    rep = zygmund_norm(GaussianBump(0.0, 0.5), 0.5, HS, X)
    ratios = [v / h**0.5 for h, v in rep.per_scale]
    assert int(np.argmax(ratios)) <= 2


def test_norm_in_two_dimensions_uses_diagonals():
    sp = GridSpec(2, 128, 4.0)
    f = GridField.from_function(sp, lambda p: np.abs(p[..., 0] + p[..., 1]))
    rep = zygmund_norm(f, 1.0, dyadic_scales(0, 4))
    assert rep.seminorm > 0
    sizes = {round(h, 12) for h, _ in rep.per_scale}
    assert any(abs(s - math.sqrt(2) * 2.0**-k) < 1e-9 for s in sizes for k in range(5))


def test_equivalent_norm_comparable():
    rep = check_norm_equivalence(GaussianBump(0.0, 0.5), 1.5, 2, 1, HS, X)
    assert rep.passed


def test_equivalent_norm_missing_derivative():
    with pytest.raises(MissingDerivative):
        equivalent_norm(lambda y: np.abs(y), 1.5, 2, 1, HS, X)


# exponent estimation ----------------------------------------------------------------


def test_weierstrass_exponent():
    hs = dyadic_scales(4, 16)
    est = holder_exponent_estimate(Weierstrass(), hs, X)
    assert est.alpha_hat == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_abs_exponent():
    est = holder_exponent_estimate(AbsKink(), dyadic_scales(4, 16), X)
    assert est.alpha_hat == pytest.approx(1.0, abs=0.02)


def test_linear_function_saturates():
    est = holder_exponent_estimate(lambda y: y, HS, X)
    assert est.saturated and est.alpha_hat == 2.0


def test_exponent_needs_six_scales():
    with pytest.raises(DegenerateFit):
        holder_exponent_estimate(Cosine(), HS[:5], X)
