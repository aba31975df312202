import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyschauder.cauchy_lab import periodized_cauchy_density
from levyschauder.errors import AliasingError, DegenerateFit
from levyschauder.levy_models import brownian, cauchy, isotropic_stable
from levyschauder.reports import fit_loglog
from levyschauder.spectral_grid import (
    GridField,
    GridSpec,
    check_chapman_kolmogorov,
    check_fourier_lower_bound,
    check_second_derivative_bound,
    default_t_list,
    density,
    density_partial,
    extend_gradient_estimate,
    fit_gradient_exponent,
    fourier_lower_bound,
    gradient_l1_curve,
    l1_norm,
    select_grid,
)


def _gauss(x, t=1.0):
    return np.exp(-x * x / (2 * t)) / np.sqrt(2 * np.pi * t)


# GridSpec / GridField ---------------------------------------------------------


@given(st.sampled_from([64, 128, 256, 1024]), st.floats(0.5, 100.0), st.sampled_from([1, 2]))
@settings(max_examples=30, deadline=None)
def test_gridspec_invariants(n, L, d):
    sp = GridSpec(d, n, L)
    assert sp.spacing * n == pytest.approx(2 * L, rel=1e-14)
    assert sp.nyquist_radius == pytest.approx(math.pi * n / (2 * L))
    ax = sp.axis()
    assert ax[0] == -L and len(ax) == n
    assert np.diff(sp.frequency_axis()).max() == pytest.approx(math.pi / L)


def test_gridspec_rejects_bad_sizes():
    with pytest.raises(ValueError):
        GridSpec(1, 100, 1.0)
    with pytest.raises(ValueError):
        GridSpec(3, 64, 1.0)
    with pytest.raises(ValueError):
        GridSpec(1, 64, -1.0)


def test_gridfield_rejects_nan():
    sp = GridSpec(1, 64, 1.0)
    with pytest.raises(ValueError):
        GridField(sp, np.full(64, np.nan))


# densities ----------------------------------------------------------------------


def test_cauchy_density_matches_periodized_closed_form():
    sp = GridSpec(1, 1024, 50.0)
    res = density(cauchy(1), 1.0, sp)
    x = sp.axis()
    sel = np.abs(x) <= 10
    exact = periodized_cauchy_density(1.0, x[sel], 50.0, 1)
    assert np.max(np.abs(res.field.values[sel] - exact) / exact) <= 1e-3
    assert res.diagnostics["mass_error"] <= 1e-6


def test_brownian_density_is_standard_normal():
    sp = GridSpec(1, 1024, 20.0)
    p = density(brownian(1), 1.0, sp).field
    assert np.max(np.abs(p.values - _gauss(sp.axis()))) <= 1e-6


@pytest.mark.parametrize("model", [cauchy(1), isotropic_stable(1.5, 2), brownian(2)],
                         ids=["cauchy1", "stable2", "brownian2"])
def test_symmetric_density_is_even(model):
    sp, _ = select_grid(model, 0.5, order=0)
    p = density(model, 0.5, sp).field
    assert np.max(np.abs(p.values - p.reflect().values)) <= 1e-10


def test_density_mass_and_positivity():
    for model in (cauchy(2), isotropic_stable(0.5, 1), isotropic_stable(1.5, 1)):
        res = density(model, 1.0)
        assert res.diagnostics["mass_error"] <= 1e-6
        assert res.diagnostics["min_value"] >= -1e-8


def test_aliasing_error_on_unresolved_grid():
    with pytest.raises(AliasingError):
        density(cauchy(1), 1e-3, GridSpec(1, 64, 50.0))


def test_stable_scaling_between_matched_lattices():
    alpha, t = 1.5, 0.2
    m = isotropic_stable(alpha, 1)
    sp1 = GridSpec(1, 2048, 40.0)
    spt = GridSpec(1, 2048, 40.0 * t ** (1 / alpha))
    p1 = density(m, 1.0, sp1).field.values
    pt = density(m, t, spt).field.values
    assert np.max(np.abs(pt - t ** (-1 / alpha) * p1)) <= 1e-5


# derivatives -----------------------------------------------------------------------


def test_gaussian_first_derivative():
    sp = GridSpec(1, 1024, 20.0)
    d1 = density_partial(brownian(1), 1.0, 1, sp)
    x = sp.axis()
    assert np.max(np.abs(d1.values + x * _gauss(x))) <= 1e-6


def test_symmetric_first_derivative_is_odd():
    sp = GridSpec(1, 1024, 50.0)
    d1 = density_partial(cauchy(1), 1.0, 1, sp)
    assert np.max(np.abs(d1.values + d1.reflect().values)) <= 1e-9


def test_cauchy_first_derivative_closed_form():
    L = 50.0
    sp = GridSpec(1, 1024, L)
    d1 = density_partial(cauchy(1), 1.0, 1, sp)
    x = sp.axis()
    a = math.pi / L
    # derivative of the periodized Poisson kernel
    exact = -math.sinh(a) * a * np.sin(a * x) / (2 * L * (math.cosh(a) - np.cos(a * x)) ** 2)
    sel = (np.abs(x) <= 10) & (np.abs(x) >= 0.05)
    assert np.max(np.abs(d1.values[sel] - exact[sel]) / np.abs(exact[sel])) <= 1e-3
    raw = -2 * x / (np.pi * (1 + x * x) ** 2)
    near = (np.abs(x) <= 2) & (np.abs(x) >= 0.05)
    assert np.max(np.abs(d1.values[near] - raw[near]) / np.abs(raw[near])) <= 1e-3


def test_derivative_order_limit():
    with pytest.raises(ValueError):
        density_partial(brownian(1), 1.0, 5, GridSpec(1, 256, 20.0))


# L1 norms and fits -----------------------------------------------------------------


@pytest.mark.parametrize("t", [0.25, 1.0])
def test_gaussian_gradient_l1(t):
    # |d p| has a kink at 0, so the rectangle rule is O(dx^2); dx ~ 5e-3 here
    sp = GridSpec(1, 4096, 10.0)
    assert l1_norm(density_partial(brownian(1), t, 1, sp)) == pytest.approx(
        math.sqrt(2 / (math.pi * t)), abs=1e-4)


def test_l1_of_zero_field():
    sp = GridSpec(1, 64, 1.0)
    assert l1_norm(GridField(sp, np.zeros(64))) == 0.0


@pytest.mark.parametrize("model,alpha", [(cauchy(2), 1.0), (isotropic_stable(0.5, 1), 0.5)],
                         ids=["cauchy2", "stable05"])
def test_gradient_exponent(model, alpha):
    fit = fit_gradient_exponent(gradient_l1_curve(model, default_t_list(per_decade=4)))
    assert fit.alpha_hat == pytest.approx(alpha, rel=0.03)


def test_brownian_gradient_fit_prefactor():
    fit = fit_gradient_exponent(gradient_l1_curve(brownian(1), default_t_list(per_decade=4)))
    assert fit.alpha_hat == pytest.approx(2.0, rel=0.03)
    assert fit.m_hat == pytest.approx(math.sqrt(2 / math.pi), rel=0.05)


def test_fit_rejects_nonpositive_values():
    with pytest.raises(DegenerateFit):
        fit_loglog([(1, 1.0), (2, 0.0), (3, 1.0), (4, 2.0)])


def test_gradient_curve_decreasing():
    curve = gradient_l1_curve(cauchy(1), [0.01, 0.1, 1.0])
    vals = [v for _, v in curve]
    assert vals[0] > vals[1] > vals[2]


# Chapman-Kolmogorov machinery ------------------------------------------------------


@pytest.mark.parametrize("model", [cauchy(1), cauchy(2), brownian(1), isotropic_stable(1.5, 2)],
                         ids=["cauchy1", "cauchy2", "brownian1", "stable2"])
def test_chapman_kolmogorov_and_second_derivative(model):
    assert check_chapman_kolmogorov(model, 0.5).passed
    assert check_second_derivative_bound(model, 0.5).passed


def test_extend_gradient_constant():
    assert extend_gradient_estimate(1.0, 1.0, 1.0)[0] == pytest.approx(math.log(2))
    assert extend_gradient_estimate(1.0, 0.5, 2.0)[0] == pytest.approx(math.log(2))


def test_extend_gradient_verifier_cauchy():
    model = cauchy(1)
    fit = fit_gradient_exponent(gradient_l1_curve(model, default_t_list(per_decade=4)))
    m, verify = extend_gradient_estimate(fit.m_hat * 1.001, 1.0, 1.0)
    assert verify(model, [1.0, 2.0, 4.0, 8.0]).passed


@pytest.mark.parametrize("model", [cauchy(1), cauchy(2), brownian(1), isotropic_stable(0.5, 1)],
                         ids=["cauchy1", "cauchy2", "brownian1", "stable05"])
@pytest.mark.parametrize("t", [0.05, 1.0])
def test_fourier_lower_bound(model, t):
    assert check_fourier_lower_bound(model, t).passed


def test_fourier_lower_bound_brownian_scaling():
    ts = [0.01, 0.03, 0.1, 0.3, 1.0]
    pts = [(t, fourier_lower_bound(brownian(1), t)) for t in ts]
    assert fit_loglog(pts).slope == pytest.approx(-0.5, rel=0.03)
