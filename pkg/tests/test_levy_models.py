import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyschauder.errors import QuadratureDivergence
from levyschauder.levy_models import (
    LevyMeasure,
    LevyTriplet,
    anisotropic_stable,
    brownian,
    cauchy,
    check_hartman_wintner,
    check_sector,
    check_spectral_nondegeneracy,
    eval_symbol,
    fit_symbol_growth,
    from_symbol,
    isotropic_stable,
    model_from_dict,
    relativistic_stable,
    small_jump_moment,
    stable_density_constant,
    stable_density_constant_closed_form,
    subordinated_brownian,
    sum_stable,
    symbol_from_triplet,
)

BUILTINS = [
    isotropic_stable(0.5, 1),
    isotropic_stable(1.5, 2),
    cauchy(1),
    cauchy(2),
    brownian(1, drift=[0.5], diffusion=[[2.0]]),
    brownian(2),
    sum_stable(1.5, 0.5, 1),
    relativistic_stable(1.0, 1.0, 2),
    subordinated_brownian(lambda s: np.sqrt(s), 1, 1.0),
    anisotropic_stable([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0], 1.2),
]


def _sample_xi(d, n=40, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, d)) * 5


# eval_symbol -------------------------------------------------------------------


def test_cauchy_symbol_is_euclidean_norm():
    assert eval_symbol(cauchy(2), [3.0, 4.0]) == pytest.approx(5.0)


@pytest.mark.parametrize("model", BUILTINS, ids=lambda m: f"{m.name}-d{m.dimension}")
def test_symbol_vanishes_at_origin(model):
    assert abs(eval_symbol(model, np.zeros(model.dimension))) < 1e-12


def test_brownian_with_drift_symbol():
    m = brownian(1, drift=[1.0], diffusion=[[2.0]])
    assert eval_symbol(m, [2.0]) == pytest.approx(4.0 - 2.0j)


@pytest.mark.parametrize("model", BUILTINS, ids=lambda m: f"{m.name}-d{m.dimension}")
def test_symbol_hermitian_and_nonnegative_real_part(model):
    xi = _sample_xi(model.dimension)
    psi = model.symbol(xi)
    assert np.all(psi.real >= -1e-10)
    assert np.allclose(model.symbol(-xi), np.conj(psi), atol=1e-10, rtol=1e-10)


@given(st.floats(0.1, 1.99), st.floats(0.1, 10.0), st.floats(-3.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_stable_symbol_homogeneity(alpha, c, x):
    m = isotropic_stable(alpha, 1)
    lhs = m.symbol(np.array([[c * x]]))[0]
    rhs = c**alpha * m.symbol(np.array([[x]]))[0]
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


# symbol_from_triplet -----------------------------------------------------------


def test_triplet_route_recovers_cauchy_symbol():
    est = symbol_from_triplet(cauchy(1).triplet, np.array([1.0]))
    assert abs(est.value - 1.0) < 1e-3
    assert est.error >= 0


def test_triplet_without_jumps_is_exact():
    trip = LevyTriplet([1.0], [[2.0]], LevyMeasure.zero(1))
    est = symbol_from_triplet(trip, np.array([2.0]))
    assert est.value == 4.0 - 2.0j
    assert est.error == 0.0


@pytest.mark.parametrize("alpha,d", [(0.5, 1), (1.5, 1), (1.0, 2), (1.5, 2)])
@pytest.mark.parametrize("r", [0.5, 3.0, 20.0])
def test_triplet_route_matches_stable_family(alpha, d, r):
    m = isotropic_stable(alpha, d)
    xi = np.zeros(d)
    xi[0] = r
    est = symbol_from_triplet(m.triplet, xi)
    assert abs(est.value.imag) < 1e-8 * r**alpha
    assert est.value.real == pytest.approx(r**alpha, rel=1e-3)


@pytest.mark.parametrize("d,alpha", [(1, 0.5), (1, 1.0), (1, 1.5), (2, 1.0)])
def test_stable_density_constant_calibration(d, alpha):
    assert stable_density_constant(d, alpha) == pytest.approx(
        stable_density_constant_closed_form(d, alpha), rel=1e-5)


def test_cauchy_density_constant_is_one_over_pi():
    assert stable_density_constant_closed_form(1, 1.0) == pytest.approx(1 / math.pi)


# structural checks ------------------------------------------------------------


def test_hartman_wintner_stable_and_brownian_pass():
    assert check_hartman_wintner(isotropic_stable(0.5, 1)).passed
    assert check_hartman_wintner(brownian(1)).passed


def test_hartman_wintner_bounded_symbol_fails():
    m = from_symbol(lambda x: 1 - np.exp(-np.sum(x * x, axis=-1)), 1)
    assert not check_hartman_wintner(m).passed


def test_sector_constant():
    assert check_sector(isotropic_stable(1.3, 2)).computed["c0"] == 0.0
    rep = check_sector(brownian(1, drift=[1.0], diffusion=[[1.0]]))
    assert math.isfinite(rep.computed["c0"]) and rep.computed["c0"] > 0
    assert not rep.computed["degenerate"]


def test_sector_pure_drift_flagged():
    rep = check_sector(from_symbol(lambda x: -1j * x[..., 0], 1))
    assert rep.computed["degenerate"]
    assert not rep.passed


def test_growth_fits():
    assert fit_symbol_growth(sum_stable(1.5, 0.5, 1)).alpha_hat == pytest.approx(1.5, abs=0.02)
    assert fit_symbol_growth(isotropic_stable(0.7, 2)).alpha_hat == pytest.approx(0.7, abs=1e-10)
    assert fit_symbol_growth(relativistic_stable(1.0, 1.0, 1)).alpha_hat == pytest.approx(1.0, abs=0.01)
    fit = fit_symbol_growth(isotropic_stable(1.2, 2))
    assert fit.lower == pytest.approx(1.0) and fit.upper == pytest.approx(1.0)


@pytest.mark.parametrize("dirs,expected", [
    ([[1.0, 0.0], [0.0, 1.0]], True),
    ([[1.0, 0.0], [-1.0, 0.0]], False),
    ([[1.0, 0.0], [0.5, math.sqrt(3) / 2], [-0.5, math.sqrt(3) / 2]], True),
])
def test_spectral_nondegeneracy(dirs, expected):
    m = anisotropic_stable(dirs, [1.0] * len(dirs), 1.2)
    assert check_spectral_nondegeneracy(m.triplet.measure).passed is expected


# small jump moments -------------------------------------------------------------


def test_small_jump_moment_convergent():
    tab = small_jump_moment(cauchy(1).triplet.measure, 1.2)
    assert tab.converged
    # two-sided: 2 * (1/pi) * int_0^1 r^(0.2-1) dr = 10/pi; the table stops at
    # eps = 1e-30, which leaves a remainder (10/pi) eps^0.2 = 1e-6 relative
    assert tab.values[-1] == pytest.approx(10 / math.pi, rel=2e-6)


def test_small_jump_moment_divergent_rate():
    tab = small_jump_moment(cauchy(1).triplet.measure, 0.8)
    assert not tab.converged
    assert tab.log_slope == pytest.approx(-0.2, rel=0.1)


def test_small_jump_moment_zero_measure():
    tab = small_jump_moment(LevyMeasure.zero(2), 0.5)
    assert all(v == 0 for v in tab.values) and tab.converged


def test_malformed_density_raises():
    bad = LevyMeasure.from_density(1, lambda y: -np.ones(y.shape[:-1]) / np.sum(y * y, -1))
    with pytest.raises(QuadratureDivergence):
        small_jump_moment(bad, 1.0)


# triplet validation and config ---------------------------------------------------


def test_triplet_rejects_non_psd():
    with pytest.raises(ValueError):
        LevyTriplet([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]], LevyMeasure.zero(2))


def test_model_from_dict_families_and_unknown_keys():
    m = model_from_dict({"family": "isotropic_stable", "alpha": 1.5, "d": 2})
    assert m.declared_index == 1.5 and m.dimension == 2
    with pytest.raises(ValueError):
        model_from_dict({"family": "cauchy", "d": 1, "bogus": 1})
    with pytest.raises(ValueError):
        model_from_dict({"family": "nope"})


def test_model_from_dict_triplet():
    m = model_from_dict({"triplet": {"b": [0.0], "Q": [[2.0]]}})
    assert eval_symbol(m, [1.0]) == pytest.approx(1.0)
