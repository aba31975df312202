"""Generator, carré du champ and the empirical Schauder experiment.

Two independent realisations of the generator are provided: quadrature
against the Lévy triplet at a point, and the Fourier multiplier ``-psi`` on
a lattice.  Their agreement, together with the product rule
``A(fg) = f Ag + g Af + Gamma(f, g)``, is what the verifiers check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corpus import as_points
from .errors import AliasingError, IdentityViolation
from .holder import HolderReport, zygmund_norm
from .levy_models import (DEFAULT_EPS, Estimate, LevyMeasure, LevyModel, LevyTriplet,
                          integrate_rays, ray_decomposition, small_ball_moment, tail_mass)
from .reports import VerificationReport
from .resolvent_engine import lattice_scales, resolvent_apply
from .spectral_grid import ALIAS_THRESHOLD, GridField, GridSpec, _nyquist_ratio

__all__ = [
    "apply_generator_triplet",
    "apply_generator_spectral",
    "generator_limit_check",
    "carre_du_champ",
    "carre_du_champ_field",
    "carre_spectral",
    "product_rule_residual",
    "carre_limit_check",
    "SchauderReport",
    "schauder_experiment",
    "resolvent_identity_residual",
    "proof_lambda",
    "c2_norm",
]

R_MAX = 1e3


# ---------------------------------------------------------------------------
# Pointwise helpers
# ---------------------------------------------------------------------------


def _caller(f, d: int) -> Callable[[np.ndarray], np.ndarray]:
    # Evaluate f on points of shape (..., d); plain callables in d = 1 get
    # the squeezed coordinate array.
    if hasattr(f, "dimension"):
        return lambda y: np.asarray(f(y), dtype=float)
    if d == 1:
        return lambda y: np.asarray(f(y[..., 0]), dtype=float)
    return lambda y: np.asarray(f(y), dtype=float)


def _grad_hess(f, x: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact derivatives when ``f.derivative`` exists, else central differences."""
    if hasattr(f, "derivative"):
        try:
            grad = np.array([float(f.derivative(_e(d, i))(x)) for i in range(d)])
            hess = np.array([[float(f.derivative(_e(d, i, j))(x)) for j in range(d)]
                             for i in range(d)])
            return grad, hess
        except Exception:  # fall through to finite differences
            pass
    call = _caller(f, d)
    h1 = 1e-5 * (1 + np.abs(x).max())
    h2 = 1e-4 * (1 + np.abs(x).max())
    eye = np.eye(d)
    grad = np.array([(call(x + h1 * eye[i]) - call(x - h1 * eye[i])) / (2 * h1)
                     for i in range(d)])
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            hess[i, j] = (call(x + h2 * (eye[i] + eye[j])) - call(x + h2 * (eye[i] - eye[j]))
                          - call(x - h2 * (eye[i] - eye[j])) + call(x - h2 * (eye[i] + eye[j]))) \
                / (4 * h2 * h2)
    return grad.reshape(d), hess


def _e(d, i, j=None):
    e = [0] * d
    e[i] += 1
    if j is not None:
        e[j] += 1
    return tuple(e)


def _third_directional(call, x: np.ndarray, theta: np.ndarray, h: float) -> np.ndarray:
    # |d^3/dr^3 f(x + r theta)| at r = 0 for each direction, by central differences
    out = []
    for th in theta:
        v = [float(call(x + k * h * th)) for k in (-2, -1, 1, 2)]
        out.append(abs((-v[0] + 2 * v[1] - 2 * v[2] + v[3]) / (2 * h**3)))
    return np.asarray(out)


def _outer_sup(call, x, theta, r_max) -> float:
    radii = r_max * np.array([1.0, 2.0, 10.0])
    pts = x[None, None, :] + radii[None, :, None] * theta[:, None, :]
    return float(np.max(np.abs(call(pts))))


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def apply_generator_triplet(triplet: LevyTriplet, f, x, eps: float = DEFAULT_EPS,
                            r_max: float = R_MAX) -> Estimate:
    """``Af(x)`` from the Lévy triplet.

    ``b.grad f + tr(Q hess f)/2 + int (f(x+y) - f(x) - grad f(x).y 1_{|y|<1}) nu(dy)``.
    Jumps below ``eps`` contribute their second-order Taylor term with a
    third-order error bar; jumps beyond ``r_max`` contribute ``-f(x)`` times
    their mass, with an error bar from ``|f|`` sampled beyond ``r_max``.
    """
    d = triplet.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(d)
    call = _caller(f, d)
    grad, hess = _grad_hess(f, x, d)
    value = float(triplet.drift @ grad + 0.5 * np.trace(triplet.diffusion @ hess))
    meas = triplet.measure
    if meas.form == "zero":
        return Estimate(value, 0.0)
    if not 0 < eps < 1:
        raise ValueError("cutoff eps must lie in (0, 1)")
    rays = ray_decomposition(meas)
    fx = float(call(x))
    w = rays.omega
    curv = np.einsum("ni,ij,nj->n", rays.theta, hess, rays.theta)
    slope = rays.theta @ grad
    m2 = small_ball_moment(rays, 2.0, eps)
    m3 = small_ball_moment(rays, 3.0, eps)
    value += 0.5 * float(np.dot(w, curv * m2))
    error = float(np.dot(w, _third_directional(call, x, rays.theta, max(eps, 1e-3)) * m3)) / 6

    def integrand(r, th):
        pts = x[None, None, :] + r[..., None] * th[:, None, :]
        return call(pts) - fx - r * (th @ grad)[:, None] * (r < 1)

    mid = integrate_rays(rays, integrand, eps, r_max, breakpoints=(1.0,))
    tail = tail_mass(rays, r_max)
    value += float(np.dot(w, mid)) - fx * float(np.dot(w, tail))
    error += _outer_sup(call, x, rays.theta, r_max) * float(np.dot(w, tail))
    return Estimate(value, error)


def _check_resolved(f: GridField, weight: np.ndarray) -> None:
    ratio = _nyquist_ratio(f.spec, weight)
    if ratio > ALIAS_THRESHOLD:
        raise AliasingError(f"field not resolved: Nyquist ratio {ratio:.3g}")


def apply_generator_spectral(model: LevyModel, f: GridField, check_alias: bool = True) -> GridField:
    """``Af`` on a lattice as the multiplier ``-psi(xi)`` (``d/dt P_t f`` at 0)."""
    fh = np.fft.fftn(f.values)
    mult = -model.symbol(f.spec.frequencies())
    if check_alias:
        _check_resolved(f, fh * mult)
    return GridField(f.spec, np.fft.ifftn(fh * mult).real)


def generator_limit_check(model: LevyModel, f: GridField, t_list, rtol: float = 1e-3
                          ) -> VerificationReport:
    """``||(P_t f - f)/t - Af||_inf`` along a decreasing ``t_list``.

    Passes if the residuals decrease and the last one is at most
    ``rtol ||Af||_inf`` (a residual of exactly 0, as for constants, passes).
    """
    ts = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_list must be decreasing")
    fh = np.fft.fftn(f.values)
    psi = model.symbol(f.spec.frequencies())
    af = np.fft.ifftn(-psi * fh).real
    scale = float(np.max(np.abs(af)))
    rows = []
    for t in ts:
        diff = np.fft.ifftn(fh * (np.expm1(-t * psi) / t + psi)).real
        rows.append((t, float(np.max(np.abs(diff)))))
    res = [r for _, r in rows]
    decreasing = all(b <= a for a, b in zip(res, res[1:]))
    passed = decreasing and res[-1] <= rtol * scale
    return VerificationReport("generator_limit",
                              {"model": model.to_dict(), "t": ts, "grid": f.spec.to_dict()},
                              {"residuals": res, "generator_sup": scale, "decreasing": decreasing},
                              rtol, passed, tables={"residuals": [("t", "residual")] + rows})


# ---------------------------------------------------------------------------
# Carré du champ
# ---------------------------------------------------------------------------


def carre_du_champ(measure: LevyMeasure, f, g, x, eps: float = DEFAULT_EPS,
                   r_max: float = R_MAX) -> Estimate:
    """``Gamma(f, g)(x) = int (f(x+y) - f(x))(g(x+y) - g(x)) nu(dy)``.

    Jumps below ``eps`` enter as ``grad f . M grad g`` with
    ``M = int_{|y|<eps} y y^T nu(dy)``; the error bar is the first neglected
    order of the product of the two increments.
    """
    d = measure.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(d)
    if measure.form == "zero":
        return Estimate(0.0, 0.0)
    cf, cg = _caller(f, d), _caller(g, d)
    gf, hf = _grad_hess(f, x, d)
    gg, hg = _grad_hess(g, x, d)
    fx, gx = float(cf(x)), float(cg(x))
    rays = ray_decomposition(measure)
    w = rays.omega
    sf, sg = rays.theta @ gf, rays.theta @ gg
    cf2 = np.einsum("ni,ij,nj->n", rays.theta, hf, rays.theta)
    cg2 = np.einsum("ni,ij,nj->n", rays.theta, hg, rays.theta)
    m2 = small_ball_moment(rays, 2.0, eps)
    m3 = small_ball_moment(rays, 3.0, eps)
    value = float(np.dot(w, sf * sg * m2))
    error = 0.5 * float(np.dot(w, (np.abs(sf * cg2) + np.abs(sg * cf2)) * m3))

    def integrand(r, th):
        pts = x[None, None, :] + r[..., None] * th[:, None, :]
        return (cf(pts) - fx) * (cg(pts) - gx)

    mid = integrate_rays(rays, integrand, eps, r_max)
    tail = float(np.dot(w, tail_mass(rays, r_max)))
    value += float(np.dot(w, mid)) + fx * gx * tail
    sup_f, sup_g = _outer_sup(cf, x, rays.theta, r_max), _outer_sup(cg, x, rays.theta, r_max)
    error += tail * (abs(fx) * sup_g + abs(gx) * sup_f + sup_f * sup_g)
    return Estimate(value, error)


def _cell_weights(measure: LevyMeasure, spec: GridSpec, near: int = 16, order: int = 6):
    """Lattice weights ``w(y)`` and the second-moment matrix of the centre cell.

    Cells within ``near`` rings of the origin get ``int_cell kappa(z)|z|^2 dz
    / |y|^2`` (Gauss-Legendre), so quadratic increments are integrated
    accurately next to the singularity; farther cells use ``kappa(y) dx^d``.
    The centre-cell matrix ``int_cell z z^T nu(dz)`` is integrated ray by
    ray up to the cell boundary.
    """
    if measure.form != "density":
        raise ValueError("lattice carré du champ needs a density-form measure")
    d, n, dx = spec.dimension, spec.n, spec.spacing
    k = np.fft.fftfreq(n, d=1.0 / n)  # signed cell offsets in FFT order
    offs = np.stack(np.meshgrid(*([k * dx] * d), indexing="ij"), axis=-1)
    r = np.sqrt((offs**2).sum(-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(r > 0, measure.kappa(offs) * dx**d, 0.0)
    near = min(near, n // 2 - 1)
    ring = np.arange(-near, near + 1)
    cells = np.stack(np.meshgrid(*([ring] * d), indexing="ij"), axis=-1).reshape(-1, d)
    cells = cells[np.any(cells != 0, axis=1)]
    x, wt = np.polynomial.legendre.leggauss(order)
    nodes = np.stack(np.meshgrid(*([x * dx / 2] * d), indexing="ij"), axis=-1).reshape(-1, d)
    wts = wt
    for _ in range(d - 1):
        wts = np.multiply.outer(wts, wt)
    wts = wts.ravel() * (dx / 2) ** d
    z = cells[:, None, :] * dx + nodes[None, :, :]
    mom = np.sum(wts * measure.kappa(z) * (z**2).sum(-1), axis=1)
    y2 = (cells**2).sum(-1) * dx**2
    w[tuple((cells % n).T)] = mom / y2
    rays = ray_decomposition(measure)
    m_center = np.zeros((d, d))
    for j in range(len(rays.omega)):
        th = rays.theta[j]
        reach = dx / 2 / np.max(np.abs(th))
        m2 = small_ball_moment(rays.restrict(j), 2.0, reach)[0]
        m_center += rays.omega[j] * m2 * np.outer(th, th)
    return w, m_center


def _far_mass(measure: LevyMeasure, spec: GridSpec) -> float:
    # nu-mass outside the ball of radius L (not represented on the lattice)
    rays = ray_decomposition(measure)
    return float(np.dot(rays.omega, tail_mass(rays, spec.half_width)))


def _gradient_field(f: GridField) -> list[np.ndarray]:
    xi = f.spec.frequencies()
    fh = np.fft.fftn(f.values)
    return [np.fft.ifftn(1j * xi[..., j] * fh).real for j in range(f.spec.dimension)]


def carre_du_champ_field(measure: LevyMeasure, f: GridField, g: GridField) -> GridField:
    """Lattice ``Gamma(f, g)`` for fields on a periodic box.

    Expanding the product, ``Gamma = C[fg] - f C[g] - g C[f] + fg W`` where
    ``C[h](x) = sum_y w(y) h(x + y)`` is a periodic correlation (done by FFT)
    and ``W = sum_y w(y)``.  The centre cell uses ``grad f . M grad g`` with
    spectral gradients, and jumps longer than the box enter as ``fg`` times
    their mass.
    """
    if f.spec != g.spec:
        raise ValueError("fields must share a lattice")
    w, m_center = _cell_weights(measure, f.spec)
    wh = np.conj(np.fft.fftn(w))

    def corr(h):
        return np.fft.ifftn(np.fft.fftn(h) * wh).real

    fv, gv = f.values, g.values
    total = w.sum() + _far_mass(measure, f.spec)
    # every sum below is written symmetrically in (f, g), so swapping the
    # arguments reproduces the result bit for bit
    out = corr(fv * gv) - (fv * corr(gv) + gv * corr(fv)) + fv * gv * total
    gf, gg = _gradient_field(f), _gradient_field(g)
    d = f.spec.dimension
    for i in range(d):
        for j in range(d):
            out = out + 0.5 * m_center[i, j] * (gf[i] * gg[j] + gf[j] * gg[i])
    return GridField(f.spec, out)


def carre_spectral(model: LevyModel, f: GridField, g: GridField) -> GridField:
    """``A(fg) - f Ag - g Af`` with every generator applied spectrally."""
    fg = GridField(f.spec, f.values * g.values)
    a_fg = apply_generator_spectral(model, fg, check_alias=False).values
    a_f = apply_generator_spectral(model, f, check_alias=False).values
    a_g = apply_generator_spectral(model, g, check_alias=False).values
    return GridField(f.spec, a_fg - f.values * a_g - g.values * a_f)


def c2_norm(f, x_samples) -> float:
    """``sum_{|beta|<=2} sup |d^beta f|`` over ``x_samples`` (exact derivatives)."""
    d = getattr(f, "dimension", 1)
    pts = as_points(x_samples, d)
    total = float(np.max(np.abs(f(pts))))
    for i in range(d):
        total += float(np.max(np.abs(f.derivative(_e(d, i))(pts))))
        for j in range(i, d):
            total += float(np.max(np.abs(f.derivative(_e(d, i, j))(pts))))
    return total


def product_rule_residual(model: LevyModel, f, g, spec: GridSpec, n_points: int = 33,
                          tol: float = 1e-2, eps: float = DEFAULT_EPS) -> VerificationReport:
    """``||A(fg) - f Ag - g Af - Gamma(f, g)||_inf / (||f||_{C^2} ||g||_{C^2})``.

    The generator terms are spectral on ``spec``; ``Gamma`` is evaluated by
    triplet quadrature at ``n_points`` nodes spread over the central half of
    the box along the first axis (and the diagonal in two dimensions).
    """
    if model.triplet is None:
        raise ValueError("model needs a Lévy triplet")
    ff = GridField.from_function(spec, f)
    gf = GridField.from_function(spec, g)
    lhs = carre_spectral(model, ff, gf)
    d, n = spec.dimension, spec.n
    idx = np.unique(np.linspace(n // 4, 3 * n // 4, n_points).astype(int))
    rows = []
    worst = 0.0
    for i in idx:
        node = (i,) if d == 1 else (i, n // 2)
        pts = [node] if d == 1 else [node, (i, i)]
        for p in pts:
            x = spec.points()[p]
            gam = carre_du_champ(model.triplet.measure, f, g, x, eps)
            diff = abs(float(lhs.values[p]) - gam.value)
            worst = max(worst, diff)
            rows.append((*x.tolist(), float(lhs.values[p]), gam.value, diff))
    xs = spec.points().reshape(-1, d)
    scale = c2_norm(f, xs) * c2_norm(g, xs)
    rel = worst / scale
    header = tuple([f"x{j}" for j in range(d)] + ["spectral", "quadrature", "abs_diff"])
    return VerificationReport("product_rule",
                              {"model": model.to_dict(), "grid": spec.to_dict(),
                               "f": getattr(f, "to_dict", lambda: "callable")(),
                               "g": getattr(g, "to_dict", lambda: "callable")()},
                              {"max_abs_residual": worst, "c2_scale": scale, "relative": rel},
                              tol, rel <= tol, tables={"residuals": [header] + rows})


def carre_limit_check(model: LevyModel, f, g, x, t_list, spec: GridSpec,
                      rtol: float = 1e-2, eps: float = DEFAULT_EPS) -> VerificationReport:
    """``E[(f(x+X_t)-f(x))(g(x+X_t)-g(x))]/t`` against ``Gamma(f, g)(x)``.

    The expectation is ``P_t F(x)`` for the lattice samples of
    ``F(z) = (f(z)-f(x))(g(z)-g(x))``, evaluated as a lattice quadrature
    against ``p_t`` in Fourier form.  Passes if the quotients converge (the
    steps between consecutive values shrink along the decreasing
    ``t_list``) and the last gap to ``Gamma`` is below ``rtol |Gamma|``.
    Periodic images of the box leave an offset of order ``nu(|y| > L)``
    in the limit, so ``L`` must be large for heavy-tailed models.
    """
    d = spec.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(d)
    idx = spec.index_of(x)
    cf, cg = _caller(f, d), _caller(g, d)
    pts = spec.points()
    big_f = (cf(pts) - float(cf(x))) * (cg(pts) - float(cg(x)))
    fh = np.fft.fftn(big_f)
    psi = model.symbol(spec.frequencies())
    gamma = carre_du_champ(model.triplet.measure, f, g, x, eps).value
    rows = []
    for t in t_list:
        val = float(np.fft.ifftn(fh * np.exp(-t * psi)).real[idx]) / t
        rows.append((float(t), val, abs(val - gamma)))
    gaps = [r[2] for r in rows]
    steps = [abs(b[1] - a[1]) for a, b in zip(rows, rows[1:])]
    converging = all(b <= a for a, b in zip(steps, steps[1:]))
    passed = converging and gaps[-1] <= rtol * abs(gamma) + 1e-12
    return VerificationReport("carre_limit",
                              {"model": model.to_dict(), "x": x.tolist(),
                               "t": [float(t) for t in t_list], "grid": spec.to_dict()},
                              {"gamma": gamma, "quotients": [r[1] for r in rows], "gaps": gaps,
                               "converging": converging},
                              rtol, passed, tables={"limit": [("t", "quotient", "gap")] + rows})


# ---------------------------------------------------------------------------
# Schauder experiment
# ---------------------------------------------------------------------------


def proof_lambda(alpha: float, T: float = 1.0) -> float:
    """``3m + 1`` with ``m = log 2 / (alpha T)``."""
    return 3 * math.log(2.0) / (alpha * T) + 1


def resolvent_identity_residual(model: LevyModel, lam: float, h: GridField) -> float:
    """``||lam R h - A R h - h||_inf / ||h||_inf`` with ``A`` spectral."""
    sup_h = h.sup_norm()
    if sup_h == 0:
        return 0.0
    f = resolvent_apply(model, lam, h, tol=1e-2).field
    af = apply_generator_spectral(model, f, check_alias=False)
    return float(np.max(np.abs(lam * f.values - af.values - h.values))) / sup_h


@dataclass(frozen=True)
class SchauderReport:
    lam: float
    rho: float
    alpha: float
    delta: float
    norm_f: HolderReport
    norm_g: HolderReport
    sup_f: float
    identity_residual: float
    refinement_drift: float | None = None
    ratio_refined: float | None = None

    @property
    def ratio(self) -> float:
        den = self.norm_g.total + self.sup_f
        if den == 0:
            return 0.0 if self.norm_f.total == 0 else math.inf
        return self.norm_f.total / den

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "rho": self.rho, "alpha": self.alpha, "delta": self.delta,
                "norm_f": self.norm_f.to_dict(), "norm_g": self.norm_g.to_dict(),
                "sup_f": self.sup_f, "ratio": self.ratio,
                "identity_residual": self.identity_residual,
                "refinement_drift": self.refinement_drift, "ratio_refined": self.ratio_refined}


def _schauder_once(model, lam, rho, h, alpha, delta, spec, scales, identity_tol):
    hf = h if isinstance(h, GridField) else GridField.from_function(spec, h)
    f = resolvent_apply(model, lam, hf, tol=1e-2).field
    resid = resolvent_identity_residual(model, lam, hf)
    if resid > identity_tol:
        raise IdentityViolation(f"resolvent identity residual {resid:.3g} > {identity_tol}")
    g = GridField(spec, (lam + rho) * f.values - hf.values)
    return (zygmund_norm(f, alpha + delta, scales), zygmund_norm(g, delta, scales),
            f.sup_norm(), resid)


def schauder_experiment(model: LevyModel, lam: float | None, rho: float, h, alpha: float,
                        delta: float, spec: GridSpec, refine: bool = True, scales=None,
                        identity_tol: float = 1e-2) -> SchauderReport:
    """Empirical constant in ``||f||_{C^(alpha+delta)} <= L (||g||_{C^delta} + ||f||_inf)``.

    ``f = R_lam h`` and ``g = (lam + rho) f - h``, so ``Af + rho f = g``
    holds up to the resolvent quadrature; the identity is verified before
    any norm is taken.  ``lam=None`` selects ``3m + 1`` from ``alpha``.
    With ``refine`` (``h`` evaluable) the experiment is repeated with ``N``
    doubled and the same scales, and the relative change of ``L`` is
    reported as ``refinement_drift``.

    Raises
    ------
    IdentityViolation
        If ``||(lam - A) f - h|| / ||h||`` exceeds ``identity_tol``.
    """
    lam = proof_lambda(alpha) if lam is None else float(lam)
    scales = lattice_scales(spec) if scales is None else np.asarray(scales, dtype=float)
    nf, ng, sup_f, resid = _schauder_once(model, lam, rho, h, alpha, delta, spec, scales,
                                          identity_tol)
    rep = SchauderReport(lam, rho, alpha, delta, nf, ng, sup_f, resid)
    if refine and not isinstance(h, GridField):
        nf2, ng2, sup2, _ = _schauder_once(model, lam, rho, h, alpha, delta, spec.refined(2),
                                           scales, identity_tol)
        r2 = SchauderReport(lam, rho, alpha, delta, nf2, ng2, sup2, resid).ratio
        base = rep.ratio
        drift = abs(r2 - base) / base if base > 0 else abs(r2)
        rep = SchauderReport(lam, rho, alpha, delta, nf, ng, sup_f, resid, drift, r2)
    return rep
