import math

import numpy as np
import pytest

from levyschauder.corpus import GaussianBump, PolynomialBump, SmoothStep, WeierstrassBump
from levyschauder.errors import AliasingError, BudgetExceeded
from levyschauder.levy_models import brownian, cauchy, isotropic_stable
from levyschauder.resolvent_engine import (
    TimeQuadrature,
    check_potential_limit,
    default_lambda,
    lattice_scales,
    potential_apply_stable,
    resolvent_apply,
    riesz_constant,
    semigroup_apply,
    verify_resolvent_smoothing,
)
from levyschauder.spectral_grid import GridField, GridSpec

SP = GridSpec(1, 512, 8.0)


def _bump(sp=SP, width=0.5):
    return GridField.from_function(sp, GaussianBump(0.0, width))


def test_quadrature_validation():
    with pytest.raises(ValueError):
        TimeQuadrature.build(0.0)
    with pytest.raises(ValueError):
        TimeQuadrature.build(1.0, n_nodes=4)
    q = TimeQuadrature.build(2.0)
    assert q.t_min == pytest.approx(1e-4) and q.t_max >= 10.0


def test_quadrature_integrates_exponential():
    q = TimeQuadrature.build(2.0)
    total = q.t_min + float(np.sum(q.weights)) + q.tail_weight
    assert total == pytest.approx(0.5, rel=1e-5)


def test_semigroup_of_constant_and_negative_time():
    one = GridField(SP, np.ones(SP.shape))
    assert np.allclose(semigroup_apply(cauchy(1), 0.7, one).values, 1.0)
    with pytest.raises(ValueError):
        semigroup_apply(cauchy(1), -1.0, one)


def test_semigroup_alias_check():
    rough = GridField(SP, (np.arange(512) % 2).astype(float))
    with pytest.raises(AliasingError):
        semigroup_apply(brownian(1), 0.0, rough)


@pytest.mark.parametrize("lam", [0.5, 2.0, 7.0])
def test_resolvent_of_constant(lam):
    one = GridField(SP, np.ones(SP.shape))
    res = resolvent_apply(cauchy(1), lam, one)
    assert np.max(np.abs(res.field.values - 1 / lam)) <= res.budget.total
    assert res.budget.total <= 1e-3 / lam


def test_resolvent_of_cosine_brownian():
    k = math.pi / 2
    f = GridField.from_function(SP, lambda p: np.cos(k * p[..., 0]))
    res = resolvent_apply(brownian(1), 1.0, f)
    assert np.max(np.abs(res.field.values - f.values / (1 + k * k / 2))) <= 1e-5


@pytest.mark.parametrize("model", [cauchy(1), isotropic_stable(1.5, 1), brownian(1)],
                         ids=["cauchy", "stable15", "brownian"])
def test_resolvent_is_positive_contraction(model):
    lam = 3.0
    g = _bump()
    out = resolvent_apply(model, lam, g).field
    assert lam * out.sup_norm() <= g.sup_norm() * (1 + 1e-6)
    assert out.values.min() >= -1e-8


def test_resolvent_equation():
    g = _bump()
    m = cauchy(1)
    a = resolvent_apply(m, 2.0, g).field.values
    b = resolvent_apply(m, 5.0, g).field
    ab = resolvent_apply(m, 2.0, b).field.values
    assert np.max(np.abs(a - b.values - 3.0 * ab)) <= 1e-5


def test_resolvent_commutes_with_lattice_translation():
    g = _bump()
    shift = 37
    shifted = GridField(SP, np.roll(g.values, shift))
    a = resolvent_apply(cauchy(1), 2.0, g).field.values
    b = resolvent_apply(cauchy(1), 2.0, shifted).field.values
    assert np.max(np.abs(np.roll(a, shift) - b)) <= 1e-12


def test_budget_exceeded_on_tight_tolerance():
    step = GridField(GridSpec(1, 64, 8.0), np.r_[np.ones(32), np.zeros(32)])
    with pytest.raises(BudgetExceeded):
        resolvent_apply(cauchy(1), 1.0, step, tol=1e-9)


def test_quadrature_lambda_mismatch():
    with pytest.raises(ValueError):
        resolvent_apply(cauchy(1), 1.0, _bump(), quad=TimeQuadrature.build(2.0))


def test_default_lambda():
    assert default_lambda(2.0) == 7.0


# potential ---------------------------------------------------------------------------


def test_riesz_constants():
    assert riesz_constant(2, 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert riesz_constant(1, 0.5) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    with pytest.raises(ValueError):
        riesz_constant(1, 1.0)


def test_potential_is_positive_and_peaks_at_bump():
    sp = GridSpec(1, 2048, 32.0)
    u = GridField.from_function(sp, PolynomialBump(radius=0.5))
    pot = potential_apply_stable(0.5, 1, u)
    assert pot.values.min() > 0
    assert abs(sp.axis()[int(np.argmax(pot.values))]) <= sp.spacing


def test_point_mass_potential_is_riesz_kernel():
    # a unit mass on one node gives c |x|^(alpha-d) away from the near-field cells
    sp = GridSpec(1, 256, 16.0)
    vals = np.zeros(sp.shape)
    vals[128] = 1.0 / sp.spacing
    pot = potential_apply_stable(0.5, 1, GridField(sp, vals)).values
    x = sp.axis()
    far = np.abs(x) >= 2.0
    exact = riesz_constant(1, 0.5) * np.abs(x[far]) ** -0.5
    assert np.max(np.abs(pot[far] - exact) / exact) <= 1e-12


def test_potential_limit_cauchy_plane():
    sp = GridSpec(2, 1024, 32.0)
    u = GridField.from_function(sp, PolynomialBump(radius=0.5, d=2))
    rep = check_potential_limit(cauchy(2), 1.0, u)
    assert rep.computed["increasing"]
    assert rep.passed, rep.computed


def test_potential_limit_dimension_mismatch():
    with pytest.raises(ValueError):
        potential_apply_stable(1.0, 2, _bump())


# smoothing --------------------------------------------------------------------------


def test_lattice_scales():
    s = lattice_scales(SP, 4)
    assert np.allclose(s, SP.spacing * np.array([1, 2, 4, 8]))


@pytest.mark.parametrize("f,beta", [
    (GaussianBump(0.0, 0.5), 0.0),
    (GaussianBump(0.0, 0.5), 0.5),
    (WeierstrassBump(terms=5, width=0.5), 0.5),
], ids=["gauss-b0", "gauss-b05", "weierstrass-b05"])
def test_resolvent_smoothing_ratio_stable(f, beta):
    sp = GridSpec(1, 1024, 8.0)
    rep = verify_resolvent_smoothing(cauchy(1), 4.0, f, 1.0, beta, sp)
    assert math.isfinite(rep.computed["ratio"]) and rep.computed["ratio"] > 0
    assert rep.passed, rep.computed


def test_smoothing_on_step_is_finite():
    sp = GridSpec(1, 1024, 8.0)
    rep = verify_resolvent_smoothing(cauchy(1), 3.0, SmoothStep(sp.spacing, 1, 2.0), 1.0, 0.0,
                                     sp, refine=False)
    assert math.isfinite(rep.computed["ratio"])


def test_smoothing_rejects_small_lambda():
    with pytest.raises(ValueError):
        verify_resolvent_smoothing(cauchy(1), 1.0, GaussianBump(), 1.0, 0.0, SP, m=1.0)


def test_smoothing_grid_field_cannot_refine():
    rep = verify_resolvent_smoothing(cauchy(1), 4.0, _bump(), 1.0, 0.0, SP)
    assert "drift" not in rep.computed
