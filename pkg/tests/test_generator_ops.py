import math

import numpy as np
import pytest

from levyschauder.corpus import Constant, GaussianBump
from levyschauder.errors import AliasingError, IdentityViolation
from levyschauder.generator_ops import (
    apply_generator_spectral,
    apply_generator_triplet,
    c2_norm,
    carre_du_champ,
    carre_du_champ_field,
    carre_limit_check,
    carre_spectral,
    generator_limit_check,
    product_rule_residual,
    proof_lambda,
    resolvent_identity_residual,
    schauder_experiment,
)
from levyschauder.levy_models import (LevyMeasure, brownian, cauchy,
                                      isotropic_stable, stable_density_constant_closed_form)
from levyschauder.resolvent_engine import lattice_scales
from levyschauder.spectral_grid import GridField, GridSpec

F = GaussianBump(0.0, 0.7)
G = GaussianBump(0.3, 0.5)
SP = GridSpec(1, 1024, 16.0)


def _stable_tail(alpha, L):
    # nu(|y| > L) for the one-dimensional isotropic stable measure
    return 2 * stable_density_constant_closed_form(1, alpha) * L ** -alpha / alpha


# generator ---------------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_triplet_and_spectral_generators_agree(alpha):
    m = isotropic_stable(alpha, 1)
    field = GridField.from_function(SP, F)
    spectral = apply_generator_spectral(m, field)
    x = np.array([0.25])
    est = apply_generator_triplet(m.triplet, F, x)
    # the periodic box folds jumps longer than L back onto the bump
    bound = _stable_tail(alpha, SP.half_width) * field.sup_norm() + est.error + 1e-6
    assert abs(spectral.values[SP.index_of(x)] - est.value) <= bound


def test_brownian_generator_on_quadratic():
    m = brownian(1, drift=[0.5], diffusion=[[2.0]])
    est = apply_generator_triplet(m.triplet, lambda y: y * y, [1.5])
    # b f' + Q f''/2 = 0.5 * 3 + 2
    assert est.value == pytest.approx(3.5, rel=1e-6)
    assert est.error == 0.0


@pytest.mark.parametrize("model", [cauchy(1), isotropic_stable(1.5, 1), brownian(1)],
                         ids=["cauchy", "stable15", "brownian"])
def test_generator_kills_constants(model):
    est = apply_generator_triplet(model.triplet, Constant(2.0), [0.3])
    assert abs(est.value) <= 1e-10 + est.error
    field = GridField(SP, np.full(SP.shape, 2.0))
    assert np.max(np.abs(apply_generator_spectral(model, field).values)) <= 1e-12


def test_spectral_generator_alias_check():
    rough = GridField(SP, (np.arange(SP.n) % 2).astype(float))
    with pytest.raises(AliasingError):
        apply_generator_spectral(cauchy(1), rough)


def test_triplet_generator_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        apply_generator_triplet(cauchy(1).triplet, F, [0.0], eps=2.0)


@pytest.mark.parametrize("model", [cauchy(1), brownian(1)], ids=["cauchy", "brownian"])
def test_generator_limit(model):
    field = GridField.from_function(SP, F)
    rep = generator_limit_check(model, field, [0.1, 0.01, 0.001, 1e-4, 1e-5])
    assert rep.passed, rep.computed


def test_generator_limit_requires_decreasing_times():
    with pytest.raises(ValueError):
        generator_limit_check(cauchy(1), GridField.from_function(SP, F), [0.01, 0.1])


# carre du champ ----------------------------------------------------------------------


def test_carre_symmetric_and_positive():
    meas = isotropic_stable(1.5, 1).triplet.measure
    a = carre_du_champ(meas, F, G, [0.2])
    b = carre_du_champ(meas, G, F, [0.2])
    assert a.value == b.value
    for x in (-1.0, 0.0, 0.2, 2.5):
        assert carre_du_champ(meas, F, F, [x]).value >= 0


def test_carre_zero_measure():
    assert carre_du_champ(LevyMeasure.zero(1), F, G, [0.0]).value == 0.0


def test_carre_is_bilinear():
    meas = cauchy(1).triplet.measure
    fg = GaussianBump(0.0, 0.7, amplitude=3.0)
    a = carre_du_champ(meas, F, G, [0.1]).value
    b = carre_du_champ(meas, fg, G, [0.1]).value
    assert b == pytest.approx(3 * a, rel=1e-9)


def test_carre_field_matches_spectral_identity():
    m = isotropic_stable(1.5, 1)
    ff, gf = GridField.from_function(SP, F), GridField.from_function(SP, G)
    lattice = carre_du_champ_field(m.triplet.measure, ff, gf).values
    spectral = carre_spectral(m, ff, gf).values
    assert np.max(np.abs(lattice - spectral)) <= 1e-2 * np.max(np.abs(spectral))
    sym = carre_du_champ_field(m.triplet.measure, gf, ff).values
    assert np.array_equal(lattice, sym)


def test_carre_field_diagonal_nonnegative():
    m = cauchy(1)
    ff = GridField.from_function(SP, F)
    assert carre_du_champ_field(m.triplet.measure, ff, ff).values.min() >= -1e-10


def test_carre_field_spec_mismatch():
    with pytest.raises(ValueError):
        carre_du_champ_field(cauchy(1).triplet.measure, GridField.from_function(SP, F),
                             GridField.from_function(GridSpec(1, 512, 16.0), G))


def test_c2_norm_of_gaussian():
    x = np.linspace(-4, 4, 4001)
    # sup f + sup |f'| + sup |f''| for exp(-x^2 / (2 s^2)), s = 0.7
    s = 0.7
    expected = 1 + math.exp(-0.5) / s + 1 / s**2
    assert c2_norm(F, x) == pytest.approx(expected, rel=1e-5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_product_rule_one_dimension(alpha):
    rep = product_rule_residual(isotropic_stable(alpha, 1), F, G, SP)
    assert rep.passed, rep.computed


def test_product_rule_plane():
    sp = GridSpec(2, 256, 8.0)
    f = GaussianBump([0.0, 0.0], 0.7, d=2)
    g = GaussianBump([0.3, 0.0], 0.5, d=2)
    rep = product_rule_residual(isotropic_stable(1.5, 2), f, g, sp, n_points=9)
    assert rep.passed, rep.computed


def test_product_rule_needs_triplet():
    from levyschauder.levy_models import from_symbol
    m = from_symbol(lambda x: np.abs(x[..., 0]), 1)
    with pytest.raises(ValueError):
        product_rule_residual(m, F, G, SP)


def test_carre_limit_converges():
    sp = GridSpec(1, 8192, 64.0)
    x = sp.points()[sp.index_of(np.array([0.1875]))]
    rep = carre_limit_check(isotropic_stable(1.5, 1), F, G, x,
                            [0.01, 0.003, 0.001, 0.0003, 0.0001], sp)
    assert rep.computed["converging"]
    assert rep.passed, rep.computed


# Schauder experiment -----------------------------------------------------------------


def test_proof_lambda():
    assert proof_lambda(1.0) == pytest.approx(3 * math.log(2) + 1)
    assert proof_lambda(2.0, T=0.5) == pytest.approx(3 * math.log(2) + 1)


@pytest.mark.parametrize("model,alpha", [(cauchy(1), 1.0), (isotropic_stable(1.5, 1), 1.5)],
                         ids=["cauchy", "stable15"])
def test_resolvent_identity(model, alpha):
    sp = GridSpec(1, 1024, 8.0)
    h = GridField.from_function(sp, GaussianBump(0.0, 0.5))
    assert resolvent_identity_residual(model, proof_lambda(alpha), h) <= 1e-4


def test_resolvent_identity_of_zero():
    sp = GridSpec(1, 64, 8.0)
    assert resolvent_identity_residual(cauchy(1), 2.0, GridField(sp, np.zeros(64))) == 0.0


@pytest.mark.parametrize("model,alpha,rho", [(cauchy(1), 1.0, 0.0), (brownian(1), 2.0, 1.0)],
                         ids=["cauchy", "brownian"])
def test_schauder_experiment_stable_under_refinement(model, alpha, rho):
    sp = GridSpec(1, 1024, 8.0)
    rep = schauder_experiment(model, None, rho, GaussianBump(0.0, 0.5), alpha, 0.5, sp)
    assert math.isfinite(rep.ratio) and rep.ratio > 0
    assert rep.refinement_drift <= 0.10
    assert rep.identity_residual <= 1e-2
    assert rep.lam == pytest.approx(proof_lambda(alpha))
    assert set(rep.to_dict()) >= {"ratio", "refinement_drift", "norm_f", "norm_g"}


def test_schauder_zero_source():
    sp = GridSpec(1, 256, 8.0)
    rep = schauder_experiment(cauchy(1), 3.0, 0.0, Constant(0.0), 1.0, 0.5, sp)
    assert rep.ratio == 0.0


def test_schauder_identity_violation():
    sp = GridSpec(1, 256, 8.0)
    with pytest.raises(IdentityViolation):
        schauder_experiment(cauchy(1), 3.0, 0.0, GaussianBump(0.0, 0.5), 1.0, 0.5, sp,
                            identity_tol=1e-14, scales=lattice_scales(sp))
