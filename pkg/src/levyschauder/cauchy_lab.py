"""Counterexamples for the two-dimensional Cauchy process.

Two functions are studied:

* ``gunter_function`` is ``C^1`` with vanishing gradient at the origin but
  ``(E f(X_t) - f(0)) / t`` diverges like ``log |log t|``, so it lies
  outside the generator domain;
* ``angular_u`` is an odd, bounded, integrable function whose Riesz
  potential ``R_0 u`` lies in the generator domain but is not Lipschitz at
  the origin.

Every divergent quantity is reduced to a one-dimensional radial integral and
evaluated with adaptive quadrature; a direct two-dimensional quadrature of
the potential is kept as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureDivergence
from .reports import VerificationReport
from .resolvent_engine import riesz_constant

__all__ = [
    "CutoffFunction",
    "gunter_function",
    "gunter_radial",
    "cauchy_density",
    "periodized_cauchy_density",
    "check_cauchy_density",
    "density_lower_constant",
    "difference_quotient_at_zero",
    "check_difference_quotient",
    "angular_u",
    "potential_radial",
    "potential_closed_form",
    "potential_direct",
    "lipschitz_quotient",
    "lipschitz_divergence",
    "riesz_constant_oracle",
    "check_potential_agreement",
]

QUAD_LIMIT = 500


@dataclass(frozen=True)
class CutoffFunction:
    """Radial cutoff equal to 1 on ``[0, a]`` and 0 on ``[b, inf)``.

    The transition is the cubic smoothstep ``1 - (3 s^2 - 2 s^3)`` with
    ``s = (r - a) / (b - a)``, which is monotone and ``C^1``.
    """

    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0 <= self.inner_radius < self.outer_radius:
            raise ValueError("need 0 <= inner_radius < outer_radius")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.inner_radius) / (self.outer_radius - self.inner_radius), 0.0, 1.0)
        out = 1.0 - s * s * (3.0 - 2.0 * s)
        return float(out) if out.ndim == 0 else out


GUNTER_CUTOFF = CutoffFunction(0.25, 0.5)
POTENTIAL_CUTOFF = CutoffFunction(0.5, 1.0)


def _radial(r, profile: Callable[[np.ndarray], np.ndarray], support: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = (r > 0) & (r < support)
    out[m] = profile(r[m])
    return out


def gunter_radial(r, cutoff: CutoffFunction = GUNTER_CUTOFF):
    """Radial profile ``r / |log r| * chi(r)`` with value 0 at ``r = 0``."""
    out = _radial(r, lambda s: s / np.abs(np.log(s)) * cutoff(s),
                  min(cutoff.outer_radius, 1.0))
    return float(out) if out.ndim == 0 else out


def gunter_function(x, cutoff: CutoffFunction = GUNTER_CUTOFF):
    """``f(x) = |x| / |log |x|| * chi(|x|)`` for ``x != 0`` and ``f(0) = 0``.

    ``x`` is a point or an array of points along the last axis.
    """
    x = np.asarray(x, dtype=float)
    return gunter_radial(np.linalg.norm(x, axis=-1), cutoff)


def cauchy_density(t: float, r, d: int = 2):
    """Closed-form Cauchy transition density at distance ``r``."""
    r = np.asarray(r, dtype=float)
    cd = math.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
    return cd * t / (t * t + r * r) ** ((d + 1) / 2)


def periodized_cauchy_density(t: float, x, half_width: float, d: int = 2, images: int = 20):
    """Cauchy density wrapped onto the torus ``[-L, L)^d``.

    This is what a discrete Fourier inversion on that box approximates.  In
    one dimension the image sum has the closed form
    ``sinh(pi t / L) / (2 L (cosh(pi t / L) - cos(pi x / L)))``.  In two
    dimensions images with ``|k_i| <= images`` are summed directly and the
    remainder is replaced by its continuum value
    ``t 4 sqrt(2) / (2 pi (2L)^2 a)`` with ``a = (2 images + 1) L``.

    ``x`` holds points along the last axis (``d = 2``) or scalars (``d = 1``).
    """
    L = float(half_width)
    x = np.asarray(x, dtype=float)
    if d == 1:
        a = math.pi * t / L
        return math.sinh(a) / (2 * L * (math.cosh(a) - np.cos(math.pi * x / L)))
    if d != 2:
        raise ValueError("d must be 1 or 2")
    k = 2 * L * np.arange(-images, images + 1)
    pts = x.reshape(-1, 2)
    out = np.zeros(len(pts))
    for shift in k:
        y1 = pts[:, 0:1] + shift
        y2 = pts[:, 1:2] + k[None, :]
        out += np.sum(cauchy_density(t, np.hypot(y1, y2), 2), axis=1)
    a = (2 * images + 1) * L
    out += t * 4 * math.sqrt(2) / (2 * math.pi * (2 * L) ** 2 * a)
    return out.reshape(x.shape[:-1])


def check_cauchy_density(d: int, spec=None, t: float = 1.0, radius: float | None = None,
                         stride: int = 1, rtol: float = 1e-3) -> VerificationReport:
    """Lattice Cauchy density against the periodized closed form.

    Compares on nodes with every ``|x_i| <= radius`` (default ``L / 2``, the
    half-lattice), using every ``stride``-th node per axis.  Also reports the
    lattice mass error.
    """
    from .levy_models import cauchy
    from .spectral_grid import GridSpec, density

    spec = GridSpec(d, 1024 if d == 1 else 512, 50.0) if spec is None else spec
    radius = spec.half_width / 2 if radius is None else float(radius)
    res = density(cauchy(d), t, spec)
    ax = spec.axis()
    sel = np.flatnonzero(np.abs(ax) <= radius)[::stride]
    if d == 1:
        pts, lat = ax[sel], res.field.values[sel]
    else:
        g1, g2 = np.meshgrid(ax[sel], ax[sel], indexing="ij")
        pts = np.stack([g1, g2], axis=-1)
        lat = res.field.values[np.ix_(sel, sel)]
    exact = periodized_cauchy_density(t, pts, spec.half_width, d)
    rel = float(np.max(np.abs(lat - exact) / exact))
    mass = res.diagnostics["mass_error"]
    passed = rel <= rtol and mass <= 1e-6
    return VerificationReport(
        "cauchy_density_golden", {"dimension": d, "t": t, "grid": spec.to_dict(), "radius": radius},
        {"max_relative_error": rel, "mass_error": mass}, {"relative": rtol, "mass": 1e-6}, passed)


def density_lower_constant(d: int = 2, t_list=None, n_r: int = 400) -> float:
    """Empirical ``inf p_t(y) |y|^(d+1) / t`` over ``t <= |y| <= 1``.

    Measured on logarithmic lattices in ``t`` and ``|y|``; the infimum is
    attained at ``|y| = t``.
    """
    t_list = np.logspace(-6, -1, 11) if t_list is None else np.asarray(t_list, dtype=float)
    best = math.inf
    for t in t_list:
        r = np.geomspace(t, 1.0, n_r)
        best = min(best, float(np.min(cauchy_density(t, r, d) * r ** (d + 1) / t)))
    return best


def _quad(fun, a, b, points=(), **kw):
    pts = sorted(p for p in points if a < p < b)
    val, err = integrate.quad(fun, a, b, points=pts or None, limit=QUAD_LIMIT, **kw)
    if not np.isfinite(val):
        raise QuadratureDivergence("radial quadrature produced a non-finite value")
    return val, err


def difference_quotient_at_zero(t_list: Sequence[float], f_rad: Callable | None = None,
                                d: int = 2, support: float = 0.5) -> list[tuple[float, float]]:
    """``D(t) = (E f(X_t) - f(0)) / t`` for a radial ``f`` and the Cauchy process.

    With ``f(0) = 0`` and ``f`` supported in the ball of radius ``support``
    the expectation is the radial integral
    ``|S^(d-1)| / t * int_0^support f(r) p_t(r) r^(d-1) dr``, evaluated in
    the variable ``log r`` with a breakpoint at ``r = t``.

    Returns
    -------
    list of (t, D(t))
    """
    f_rad = gunter_radial if f_rad is None else f_rad
    ts = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_list must be decreasing")
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    rows = []
    for t in ts:
        def integrand(s, t=t):
            r = math.exp(s)
            return float(f_rad(r)) * float(cauchy_density(t, r, d)) * r**d

        lo = math.log(t) - 60.0
        val, _ = _quad(integrand, lo, math.log(support),
                       points=(math.log(t), math.log(support / 2)), epsrel=1e-10, epsabs=0.0)
        rows.append((t, sphere * val / t))
    return rows


def _log_log(t: float) -> float:
    return math.log(abs(math.log(t)))


def check_difference_quotient(t_list=None, d: int = 2) -> VerificationReport:
    """Monotone divergence of ``D(t)`` for ``gunter_function``.

    Checks that ``D`` is strictly increasing as ``t`` decreases, that
    ``D(t) >= 2 pi c [log|log t| - log log 4]`` for ``t <= 1e-2`` and that
    the total growth over the list is at least half of the corresponding
    lower-bound growth, where ``c`` is ``density_lower_constant``.
    """
    t_list = [10.0**-k for k in range(1, 6)] if t_list is None else list(t_list)
    rows = difference_quotient_at_zero(t_list, d=d)
    c = density_lower_constant(d)
    bound = [2 * math.pi * c * (_log_log(t) - _log_log(4.0)) for t, _ in rows]
    values = [v for _, v in rows]
    increasing = all(b > a for a, b in zip(values, values[1:]))
    above = all(v >= lb for (t, v), lb in zip(rows, bound) if t <= 1e-2)
    growth = values[-1] - values[0]
    growth_bound = 0.5 * 2 * math.pi * c * (_log_log(t_list[-1]) - _log_log(t_list[0]))
    passed = increasing and above and growth >= growth_bound
    table = [("t", "D", "lower_bound")] + [(t, v, lb) for (t, v), lb in zip(rows, bound)]
    return VerificationReport(
        "difference_quotient_at_zero", {"t": t_list, "dimension": d},
        {"D": values, "lower_bound": bound, "density_constant": c, "increasing": increasing,
         "above_bound": above, "growth": growth, "growth_bound": growth_bound},
        {"growth_fraction": 0.5}, passed, tables={"difference_quotient": table})


def _potential_profile(r, cutoff: CutoffFunction = POTENTIAL_CUTOFF):
    return _radial(r, lambda s: cutoff(s) / np.abs(np.log(s)), 1.0)


def potential_radial(r, cutoff: CutoffFunction = POTENTIAL_CUTOFF):
    """Radial factor ``chi(r) / |log r|`` of ``angular_u``, zero at 0 and for ``r >= 1``."""
    out = _potential_profile(r, cutoff)
    return float(out) if out.ndim == 0 else out


def angular_u(x, f_rad: Callable | None = None):
    """``u(x) = (x_1/|x|) (|x_2|/|x|) f_rad(|x|)`` with ``u(0) = 0``.

    ``x`` is a 2-vector or an array of 2-vectors along the last axis.
    """
    f_rad = potential_radial if f_rad is None else f_rad
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    out = np.zeros_like(r)
    m = r > 0
    out[m] = x[..., 0][m] * np.abs(x[..., 1][m]) / r[m] ** 2 * np.asarray(f_rad(r[m]))
    return float(out) if out.ndim == 0 else out


def _closed_form_terms(s: float, f_rad: Callable) -> tuple[float, float]:
    g = lambda r: float(f_rad(r))
    near, _ = _quad(lambda r: r * r * g(r), 0.0, s, epsrel=1e-11, epsabs=0.0)
    far, _ = _quad(lambda r: g(r) / r, s, 1.0, points=(0.5,), epsrel=1e-11, epsabs=0.0)
    return near, far


def potential_closed_form(s: float, f_rad: Callable | None = None) -> float:
    """Radially reduced potential ``R_0 u`` at the point ``(s, 0)``.

    ``(4 c / 3) (s^-2 int_0^s r^2 f(r) dr + s int_s^1 f(r) / r dr)`` with
    ``c = c_{2,1} = 1 / (2 pi)``.  The angular integral over the direction
    of ``z`` has been carried out exactly; the point lies on the axis along
    which ``u`` is odd, where the potential is not identically zero.
    """
    if not 0 < s < 1:
        raise ValueError("need 0 < s < 1")
    f_rad = potential_radial if f_rad is None else f_rad
    near, far = _closed_form_terms(s, f_rad)
    return 4.0 / 3.0 * riesz_constant(2, 1.0) * (near / s**2 + s * far)


def potential_direct(s: float, f_rad: Callable | None = None, n_angle: int = 48,
                     panels: int = 16, sign: float = 1.0) -> float:
    """``c int |z|^-1 u((s, 0) + z) dz`` by two-dimensional quadrature.

    Polar coordinates centred at the evaluation point absorb the kernel
    singularity exactly (``dz / |z| = d rho d theta``).  The angle uses
    composite Gauss-Legendre panels whose edges sit on the coordinate axes
    where ``|x_2|`` has its kink; the radius uses adaptive quadrature with
    breakpoints where the circle of radius ``rho`` touches the origin or the
    support boundary.  ``sign`` multiplies ``u`` (linearity check).
    """
    f_rad = potential_radial if f_rad is None else f_rad
    s = float(s)
    x, w = np.polynomial.legendre.leggauss(n_angle)
    edges = np.linspace(0.0, 2 * np.pi, panels + 1)
    half = (edges[1:] - edges[:-1])[:, None] / 2
    theta = ((edges[:-1, None] + edges[1:, None]) / 2 + half * x).ravel()
    weights = (half * w).ravel()
    c, sn = np.cos(theta), np.sin(theta)

    def ring(rho):
        pts = np.stack([s + rho * c, rho * sn], axis=-1)
        return float(np.sum(weights * angular_u(pts, f_rad)))

    brk = [abs(s), abs(1 - abs(s)), 1.0]
    val, _ = _quad(ring, 0.0, 1.0 + abs(s), points=brk, epsrel=1e-6, epsabs=1e-10)
    return sign * riesz_constant(2, 1.0) * val


def lipschitz_quotient(s: float, f_rad: Callable | None = None) -> float:
    """``(R_0 u(s, 0) - R_0 u(0)) / s`` from the closed form (``R_0 u(0) = 0``)."""
    return potential_closed_form(s, f_rad) / s


def lipschitz_divergence(s_list=None, rtol: float = 0.15) -> VerificationReport:
    """Divergence of the Lipschitz quotients of ``R_0 u`` at the origin.

    Passes if the quotients increase strictly as ``s`` decreases along
    ``s_list`` (default ``2^-k``, ``k = 3..12``) and the least-squares slope
    of quotient against ``log |log s|`` is within ``rtol`` of ``4 c / 3``.
    """
    s_list = [2.0**-k for k in range(3, 13)] if s_list is None else [float(s) for s in s_list]
    if any(b >= a for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be decreasing")
    q = [lipschitz_quotient(s) for s in s_list]
    ll = [_log_log(s) for s in s_list]
    slope = float(np.polyfit(ll, q, 1)[0])
    predicted = 4.0 / 3.0 * riesz_constant(2, 1.0)
    increasing = all(b > a for a, b in zip(q, q[1:]))
    rel = abs(slope - predicted) / predicted
    passed = increasing and rel <= rtol
    table = [("s", "quotient", "predicted_slope")] + [(s, v, predicted) for s, v in zip(s_list, q)]
    return VerificationReport(
        "lipschitz_divergence", {"s": s_list},
        {"quotients": q, "slope": slope, "predicted_slope": predicted, "relative_error": rel,
         "increasing": increasing}, rtol, passed, tables={"lipschitz": table})


def riesz_constant_oracle(radii=(0.1, 0.5, 1.0, 2.0)) -> float:
    """``|x| int_0^inf p_t(x) dt`` for the planar Cauchy density, averaged over ``radii``.

    The time integral of the transition density is the Riesz kernel
    ``c_{2,1} |x|^-1``, so this reproduces the constant independently of the
    Gamma-function formula.
    """
    vals = []
    for r in radii:
        val, _ = _quad(lambda t: float(cauchy_density(t, r, 2)), 0.0, np.inf,
                       epsrel=1e-11, epsabs=0.0)
        vals.append(r * val)
    return float(np.mean(vals))


def check_potential_agreement(s_list=(0.1, 0.05, 0.01), rtol: float = 1e-2) -> VerificationReport:
    """Direct versus closed-form potential, oddness at 0 and the Riesz constant."""
    rows = []
    for s in s_list:
        a, b = potential_closed_form(s), potential_direct(s)
        rows.append((s, a, b, abs(b - a) / abs(a)))
    at_zero = potential_direct(0.0)
    c, oracle = riesz_constant(2, 1.0), riesz_constant_oracle()
    c_rel = abs(c - oracle) / oracle
    worst = max(r[3] for r in rows)
    passed = worst <= rtol and abs(at_zero) <= 1e-10 and c_rel <= rtol
    table = [("s", "closed_form", "direct", "relative_gap")] + rows
    return VerificationReport(
        "potential_agreement", {"s": list(s_list)},
        {"max_relative_gap": worst, "potential_at_zero": at_zero, "riesz_constant": c,
         "riesz_oracle": oracle, "riesz_relative_error": c_rel},
        rtol, passed, tables={"potential": table})
