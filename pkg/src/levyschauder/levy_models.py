"""Lévy process models: characteristic exponents, triplets and structural checks.

A model is described by its characteristic exponent ``psi`` with
``E exp(i xi.X_t) = exp(-t psi(xi))`` and, when available, by its Lévy
triplet ``(b, Q, nu)``.  Jump measures come in two forms: a density
``kappa(y)`` with respect to Lebesgue measure, or a polar form
``nu = sum_i w_i delta_{theta_i}(d theta) rho(r) dr`` with the two-regime
radial profile ``rho(r) = r**(-1-alpha)`` on ``(0, r0]`` and
``r**(-1-beta)`` beyond.

All integrals against ``nu`` are computed ray by ray: the measure is
decomposed into directions ``theta_j`` with weights ``omega_j`` and radial
densities ``g_j``, and each radial integral runs over log-spaced shells with
adaptive Gauss-Legendre refinement.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import QuadratureDivergence
from .reports import ScalingFit, VerificationReport, fit_loglog

__all__ = [
    "Estimate",
    "LevyMeasure",
    "LevyTriplet",
    "LevyModel",
    "isotropic_stable",
    "cauchy",
    "brownian",
    "sum_stable",
    "relativistic_stable",
    "subordinated_brownian",
    "anisotropic_stable",
    "from_symbol",
    "from_triplet",
    "eval_symbol",
    "symbol_from_triplet",
    "stable_density_constant",
    "stable_density_constant_closed_form",
    "check_hartman_wintner",
    "check_sector",
    "fit_symbol_growth",
    "GrowthFit",
    "check_spectral_nondegeneracy",
    "small_jump_moment",
    "MomentTable",
    "model_from_dict",
    "default_directions",
]

DEFAULT_EPS = 1e-3
SHELLS_PER_DECADE = 32
_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


class Estimate(NamedTuple):
    """A quadrature value with an (a posteriori) error bar."""

    value: complex | float
    error: float


# ---------------------------------------------------------------------------
# Lévy measures and triplets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyMeasure:
    """Jump measure in density, polar or zero form.

    Use the constructors :meth:`zero`, :meth:`from_density` and
    :meth:`polar` rather than instantiating directly.
    """

    form: str
    dimension: int
    kappa: Callable[[np.ndarray], np.ndarray] | None = None
    directions: np.ndarray | None = None
    weights: np.ndarray | None = None
    inner_index: float | None = None
    outer_index: float = math.inf
    radius: float = 1.0
    isotropic: bool = False
    description: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.form not in ("density", "polar", "zero"):
            raise ValueError(f"unknown measure form {self.form!r}")
        if self.dimension not in (1, 2):
            raise ValueError("only d in {1, 2} is supported")
        if self.form == "polar":
            dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
            w = np.asarray(self.weights, dtype=float).ravel()
            if dirs.shape != (len(w), self.dimension):
                raise ValueError("directions must have shape (n, d) matching weights")
            if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1) > 1e-12):
                raise ValueError("spectral directions must be unit vectors")
            if np.any(w <= 0):
                raise ValueError("spectral weights must be positive")
            if not 0 < self.inner_index < 2:
                raise ValueError("inner index must lie in (0, 2)")
            if not self.outer_index > 0:
                raise ValueError("outer index must be positive (inf allowed)")
            if not self.radius > 0:
                raise ValueError("radius r0 must be positive")
            object.__setattr__(self, "directions", dirs)
            object.__setattr__(self, "weights", w)

    @classmethod
    def zero(cls, d: int) -> "LevyMeasure":
        return cls("zero", d, description={"form": "zero"})

    @classmethod
    def from_density(cls, d: int, kappa: Callable, isotropic: bool = False,
                     description: dict | None = None) -> "LevyMeasure":
        """Measure ``kappa(y) dy``; ``kappa`` takes points of shape ``(..., d)``."""
        return cls("density", d, kappa=kappa, isotropic=isotropic,
                   description=description or {"form": "density"})

    @classmethod
    def polar(cls, directions, weights, inner_index: float,
              outer_index: float | None = None, radius: float = 1.0) -> "LevyMeasure":
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        outer = math.inf if outer_index is None else float(outer_index)
        desc = {
            "form": "polar",
            "directions": dirs.tolist(),
            "weights": np.asarray(weights, dtype=float).ravel().tolist(),
            "inner_index": float(inner_index),
            "outer_index": None if math.isinf(outer) else outer,
            "radius": float(radius),
        }
        return cls("polar", dirs.shape[1], directions=dirs, weights=weights,
                   inner_index=float(inner_index), outer_index=outer,
                   radius=float(radius), description=desc)

    def radial_profile(self, r: np.ndarray) -> np.ndarray:
        """Polar-form radial density ``rho(r)``."""
        r = np.asarray(r, dtype=float)
        inner = r <= self.radius
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lo = np.where(inner, r ** (-1.0 - self.inner_index), 0.0)
            if math.isinf(self.outer_index):
                hi = 0.0
            else:
                hi = np.where(inner, 0.0, r ** (-1.0 - self.outer_index))
        return lo + hi


@dataclass(frozen=True)
class LevyTriplet:
    """Drift ``b``, diffusion matrix ``Q`` and jump measure ``nu``."""

    drift: np.ndarray
    diffusion: np.ndarray
    measure: LevyMeasure

    def __post_init__(self):
        d = self.measure.dimension
        b = np.asarray(self.drift, dtype=float).reshape(d)
        q = np.asarray(self.diffusion, dtype=float).reshape(d, d)
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(q).min() < -1e-12:
            raise ValueError("diffusion matrix must be positive semi-definite")
        object.__setattr__(self, "drift", b)
        object.__setattr__(self, "diffusion", q)

    @property
    def dimension(self) -> int:
        return self.measure.dimension

    def integrability(self, eps: float = 1e-12) -> float:
        """Numerical value of ``int min(1, |y|^2) nu(dy)``.

        Raises :class:`QuadratureDivergence` if the shell sums near the
        origin or at infinity do not settle.
        """
        if self.measure.form == "zero":
            return 0.0
        rays = ray_decomposition(self.measure)
        near = small_ball_moment(rays, 2.0, 1.0)
        far = tail_mass(rays, 1.0)
        return float(np.dot(rays.omega, near + far))

    def to_dict(self) -> dict:
        return {
            "b": self.drift.tolist(),
            "Q": self.diffusion.tolist(),
            "measure": dict(self.measure.description),
        }


# ---------------------------------------------------------------------------
# Ray decomposition and shell quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rays:
    """``nu = sum_j omega_j * (theta_j-ray with radial density g_j(r) dr)``.

    ``factory(theta)`` returns the radial density ``g(r)`` for the given
    directions, mapping ``r`` of shape ``(n, m)`` to ``(n, m)``.
    """

    theta: np.ndarray  # (n, d)
    omega: np.ndarray  # (n,)
    factory: Callable[[np.ndarray], Callable[[np.ndarray], np.ndarray]]
    breakpoints: tuple[float, ...] = ()

    def density(self, r: np.ndarray) -> np.ndarray:
        return self.factory(self.theta)(r)

    def restrict(self, idx) -> "Rays":
        idx = np.atleast_1d(idx)
        return Rays(self.theta[idx], self.omega[idx], self.factory, self.breakpoints)


def default_directions(d: int, n_angles: int = 64) -> np.ndarray:
    """Angular sample used by the symbol checks: ``{-1, +1}`` or a circle."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    phi = 2 * np.pi * np.arange(n_angles) / n_angles
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


def _arc_nodes(align: np.ndarray | None, per_arc: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre on four quarter arcs delimited by +-align and its normal,
    # where |cos| kinks of symbol integrands sit.
    base = 0.0 if align is None else math.atan2(align[1], align[0])
    # The map phi = (pi/4)(1 - cos(pi u)), u in [0, 1], flattens the
    # endpoint behaviour |phi|^a into |u|^(2a+1).
    x, w = np.polynomial.legendre.leggauss(per_arc)
    u, wu = (x + 1) / 2, w / 2
    off = np.pi / 4 * (1 - np.cos(np.pi * u))
    jac = np.pi**2 / 4 * np.sin(np.pi * u)
    phis, wts = [], []
    for q in range(4):
        lo = base + q * np.pi / 2
        phis.append(lo + off)
        wts.append(wu * jac)
    return np.concatenate(phis), np.concatenate(wts)


def ray_decomposition(measure: LevyMeasure, n_angles: int = 64,
                      align: np.ndarray | None = None) -> Rays:
    """Split ``measure`` into weighted rays.

    For two-dimensional densities the angular rule is the periodic
    trapezoid with ``n_angles`` nodes, or (``align`` given) Gauss-Legendre on
    quarter arcs aligned with ``align``.
    """
    d = measure.dimension
    if measure.form == "zero":
        return Rays(np.zeros((0, d)), np.zeros(0), lambda th: (lambda r: np.zeros_like(r)))
    if measure.form == "polar":
        return Rays(measure.directions, measure.weights,
                    lambda th: measure.radial_profile, (measure.radius,))
    kappa = measure.kappa
    if d == 1:
        theta = np.array([[1.0], [-1.0]])
        omega = np.ones(2)
        jac = 0
    else:
        if align is not None and np.linalg.norm(align) > 0:
            phi, omega = _arc_nodes(np.asarray(align, float) / np.linalg.norm(align),
                                    max(n_angles // 4, 8))
        else:
            phi = 2 * np.pi * np.arange(n_angles) / n_angles
            omega = np.full(n_angles, 2 * np.pi / n_angles)
        theta = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        jac = 1

    def factory(th):
        def g(r):
            y = r[..., None] * th[:, None, :]
            return np.asarray(kappa(y), dtype=float) * r**jac
        return g

    return Rays(theta, omega, factory)


def _shell_edges(a: float, b: float, per_decade: int, breakpoints=()) -> np.ndarray:
    n = max(1, int(math.ceil(per_decade * math.log10(b / a))))
    edges = np.geomspace(a, b, n + 1)
    extra = [p for p in breakpoints if a < p < b]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    return edges


def integrate_rays(rays: Rays, integrand: Callable, a: float, b: float,
                   per_decade: int = SHELLS_PER_DECADE, rtol: float = 1e-10,
                   atol: float = 1e-14, max_depth: int = 14,
                   breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Per-ray integrals ``int_a^b integrand(r, theta_j) g_j(r) dr``.

    ``integrand(r, theta)`` receives ``r`` of shape ``(n, m)`` and the
    direction array ``theta`` of shape ``(n, d)``; it returns an array of
    shape ``(n, m)`` (real or complex).  Shells are log-spaced; each shell is
    bisected until a 16-point Gauss-Legendre rule agrees with its two-halves
    refinement.
    """
    theta = rays.theta
    n = theta.shape[0]
    if n == 0 or not b > a:
        return np.zeros(n)
    edges = _shell_edges(a, b, per_decade, tuple(breakpoints) + rays.breakpoints)
    lo, hi = edges[:-1], edges[1:]
    total = None
    depth = 0
    density = rays.factory(theta)

    def gl(lo_, hi_):
        mid, half = (lo_ + hi_) / 2, (hi_ - lo_) / 2
        r = mid[:, None] + half[:, None] * _GL_NODES[None, :]  # (k, m)
        flat = np.broadcast_to(r.ravel(), (n, r.size))
        vals = integrand(flat, theta) * density(flat)
        vals = vals.reshape(n, *r.shape)
        return np.einsum("nkm,m->nk", vals, _GL_WEIGHTS) * half[None, :]

    coarse = gl(lo, hi)
    while lo.size:
        mid = (lo + hi) / 2
        left, right = gl(lo, mid), gl(mid, hi)
        fine = left + right
        err = np.max(np.abs(fine - coarse), axis=0)
        scale = np.max(np.abs(fine), axis=0)
        ok = (err <= atol + rtol * scale) | (depth >= max_depth)
        if not np.all(np.isfinite(fine)):
            raise QuadratureDivergence("non-finite values in shell quadrature")
        acc = fine[:, ok].sum(axis=1)
        total = acc if total is None else total + acc
        bad = ~ok
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        coarse = np.concatenate([left[:, bad], right[:, bad]], axis=1)
        depth += 1
    return total


def _decade_sum(rays: Rays, integrand: Callable, start: float, factor: float,
                rtol: float, max_decades: int, what: str) -> np.ndarray:
    # Sum decade shells start*factor^k; once the ratio of successive decade
    # contributions settles (a power law), the remainder is a geometric series.
    n = rays.theta.shape[0]
    total = np.zeros(n)
    edge = start
    prev, q_prev = None, None
    for k in range(max_decades):
        nxt = edge * factor
        lo, hi = min(edge, nxt), max(edge, nxt)
        part = integrate_rays(rays, integrand, lo, hi)
        total = total + part
        size = float(np.max(np.abs(part)))
        scale = max(float(np.max(np.abs(total))), 1e-300)
        if size <= rtol * scale:
            return total
        if prev is not None and prev > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(np.abs(prev_part) > 0, part / prev_part, 0.0)
            if q_prev is not None and np.all(np.abs(q - q_prev) < 1e-7):
                if np.all(q < 1 - 1e-9):
                    return total + part * q / (1 - q)
                raise QuadratureDivergence(f"{what} diverges")
            q_prev = q
        prev, prev_part = size, part
        edge = nxt
    raise QuadratureDivergence(f"{what} did not converge")


def small_ball_moment(rays: Rays, power: float, radius: float,
                      rtol: float = 1e-13, max_decades: int = 300) -> np.ndarray:
    """Per-ray ``int_0^radius r^power g_j(r) dr`` by downward decades.

    Raises :class:`QuadratureDivergence` if the decade contributions do not
    decay (non-integrable singularity at the origin).
    """
    return _decade_sum(rays, lambda r, th: r**power, radius, 0.1, rtol, max_decades,
                       "small-jump moment")


def tail_mass(rays: Rays, radius: float, rtol: float = 1e-13,
              max_decades: int = 300) -> np.ndarray:
    """Per-ray ``int_radius^inf g_j(r) dr`` by upward decades."""
    return _decade_sum(rays, lambda r, th: np.ones_like(r), radius, 10.0, rtol,
                       max_decades, "Lévy measure tail")


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """A Lévy process given by its exponent and, optionally, its triplet."""

    dimension: int
    symbol_fn: Callable[[np.ndarray], np.ndarray]
    triplet: LevyTriplet | None = None
    declared_index: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    symmetric: bool = False

    def symbol(self, xi) -> np.ndarray:
        """Vectorised ``psi``; ``xi`` has shape ``(..., d)``."""
        xi = np.asarray(xi, dtype=float)
        if self.dimension == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., None]
        return np.asarray(self.symbol_fn(xi), dtype=complex)

    def to_dict(self) -> dict:
        out = {"family": self.name, "d": self.dimension}
        out.update(self.params)
        return out


def eval_symbol(model: LevyModel, xi) -> complex:
    """``psi(xi)`` at a single frequency vector."""
    xi = np.asarray(xi, dtype=float).reshape(model.dimension)
    return complex(model.symbol(xi[None, :])[0])


def _norm(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(xi * xi, axis=-1))


def stable_density_constant_closed_form(d: int, alpha: float) -> float:
    """Gamma-function value of ``c_{d,alpha}`` with ``int(1-cos) c|y|^{-d-a} = |xi|^a``."""
    return (alpha * 2 ** (alpha - 1) * special.gamma((d + alpha) / 2)
            / (np.pi ** (d / 2) * special.gamma(1 - alpha / 2)))


@lru_cache(maxsize=None)
def stable_density_constant(d: int, alpha: float) -> float:
    """Normalising constant of the isotropic ``alpha``-stable Lévy density.

    Calibrated numerically: the unnormalised measure ``|y|^{-d-alpha} dy``
    is pushed through :func:`symbol_from_triplet` at ``xi = e_1`` and the
    constant is the reciprocal of the result.
    """
    meas = LevyMeasure.from_density(d, lambda y: _norm(y) ** (-d - alpha), isotropic=True)
    trip = LevyTriplet(np.zeros(d), np.zeros((d, d)), meas)
    xi = np.zeros(d)
    xi[0] = 1.0
    val = symbol_from_triplet(trip, xi, eps=1e-6).value
    return float(1.0 / val.real)


def _power_density(d: int, alpha: float, coeff: float) -> Callable:
    def kappa(y):
        r = _norm(y)
        with np.errstate(divide="ignore"):
            return coeff * r ** (-d - alpha)
    return kappa


def isotropic_stable(alpha: float, d: int = 1) -> LevyModel:
    """``psi(xi) = |xi|^alpha``, ``0 < alpha <= 2`` (``alpha = 2``: ``|xi|^2``)."""
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    if alpha == 2:
        trip = LevyTriplet(np.zeros(d), 2 * np.eye(d), LevyMeasure.zero(d))
    else:
        c = stable_density_constant(d, alpha)
        meas = LevyMeasure.from_density(
            d, _power_density(d, alpha, c), isotropic=True,
            description={"form": "density", "kind": "power", "index": alpha, "coefficient": c})
        trip = LevyTriplet(np.zeros(d), np.zeros((d, d)), meas)
    return LevyModel(d, lambda xi: _norm(xi) ** alpha + 0j, trip, alpha,
                     "isotropic_stable", {"alpha": alpha}, symmetric=True)


def cauchy(d: int = 1) -> LevyModel:
    m = isotropic_stable(1.0, d)
    return LevyModel(d, m.symbol_fn, m.triplet, 1.0, "cauchy", {}, symmetric=True)


def brownian(d: int = 1, drift=None, diffusion=None) -> LevyModel:
    """``psi(xi) = -i b.xi + xi.Q xi / 2`` (Brownian motion with drift)."""
    b = np.zeros(d) if drift is None else np.asarray(drift, dtype=float).reshape(d)
    q = np.eye(d) if diffusion is None else np.asarray(diffusion, dtype=float).reshape(d, d)
    trip = LevyTriplet(b, q, LevyMeasure.zero(d))

    def psi(xi):
        quad = 0.5 * np.einsum("...i,ij,...j->...", xi, q, xi)
        return quad - 1j * (xi @ b)

    declared = 2.0 if np.linalg.eigvalsh(q).min() > 0 else None
    return LevyModel(d, psi, trip, declared, "brownian",
                     {"drift": b.tolist(), "diffusion": q.tolist()},
                     symmetric=not np.any(b))


def sum_stable(alpha: float, beta: float, d: int = 1) -> LevyModel:
    """``psi(xi) = |xi|^alpha + |xi|^beta`` with both indices in ``(0, 2)``."""
    ca, cb = stable_density_constant(d, alpha), stable_density_constant(d, beta)

    def kappa(y):
        r = _norm(y)
        with np.errstate(divide="ignore"):
            return ca * r ** (-d - alpha) + cb * r ** (-d - beta)

    meas = LevyMeasure.from_density(d, kappa, isotropic=True,
                                    description={"form": "density", "kind": "sum_power",
                                                 "indices": [alpha, beta]})
    trip = LevyTriplet(np.zeros(d), np.zeros((d, d)), meas)
    return LevyModel(d, lambda xi: _norm(xi) ** alpha + _norm(xi) ** beta + 0j, trip,
                     max(alpha, beta), "sum_stable", {"alpha": alpha, "beta": beta},
                     symmetric=True)


def relativistic_stable(alpha: float, mass: float = 1.0, d: int = 1) -> LevyModel:
    """``psi(xi) = (|xi|^2 + m^{2/alpha})^{alpha/2} - m``."""
    def psi(xi):
        return (np.sum(xi * xi, axis=-1) + mass ** (2 / alpha)) ** (alpha / 2) - mass + 0j

    return LevyModel(d, psi, None, alpha, "relativistic_stable",
                     {"alpha": alpha, "mass": mass}, symmetric=True)


def subordinated_brownian(bernstein: Callable[[np.ndarray], np.ndarray], d: int = 1,
                          index: float | None = None, label: str = "custom") -> LevyModel:
    """``psi(xi) = f(|xi|^2)`` for a caller-supplied Bernstein function ``f``."""
    def psi(xi):
        return np.asarray(bernstein(np.sum(xi * xi, axis=-1)), dtype=complex)

    return LevyModel(d, psi, None, index, "subordinated_brownian",
                     {"bernstein": label, "index": index}, symmetric=True)


def _stable_ray_constant(alpha: float) -> float:
    # int_0^inf (1 - cos u) u^{-1-alpha} du
    if abs(alpha - 1.0) < 1e-14:
        return np.pi / 2
    return special.gamma(1 - alpha) * math.cos(np.pi * alpha / 2) / alpha


def anisotropic_stable(directions, weights, alpha: float) -> LevyModel:
    """Stable process with discrete spectral measure ``sum_i w_i delta_{theta_i}``.

    The spectral measure is symmetrised (mass ``w_i/2`` on ``+-theta_i``), so
    ``psi(xi) = k_alpha * sum_i w_i |theta_i . xi|^alpha`` is real.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    sym_dirs = np.concatenate([dirs, -dirs])
    sym_w = np.concatenate([w, w]) / 2
    meas = LevyMeasure.polar(sym_dirs, sym_w, alpha, alpha, 1.0)
    trip = LevyTriplet(np.zeros(dirs.shape[1]), np.zeros((dirs.shape[1],) * 2), meas)
    k = _stable_ray_constant(alpha)

    def psi(xi):
        proj = np.abs(xi @ dirs.T)
        return k * (proj ** alpha) @ w + 0j

    return LevyModel(dirs.shape[1], psi, trip, alpha, "anisotropic_stable",
                     {"alpha": alpha, "directions": dirs.tolist(), "weights": w.tolist()},
                     symmetric=True)


def from_symbol(psi: Callable, d: int = 1, declared_index: float | None = None,
                name: str = "custom", symmetric: bool = False) -> LevyModel:
    return LevyModel(d, psi, None, declared_index, name, {}, symmetric)


def from_triplet(triplet: LevyTriplet, declared_index: float | None = None,
                 eps: float = DEFAULT_EPS) -> LevyModel:
    """Model whose exponent is evaluated by quadrature from the triplet (slow)."""
    def psi(xi):
        flat = xi.reshape(-1, triplet.dimension)
        vals = [symbol_from_triplet(triplet, v, eps).value for v in flat]
        return np.asarray(vals, dtype=complex).reshape(xi.shape[:-1])

    return LevyModel(triplet.dimension, psi, triplet, declared_index, "triplet",
                     {"triplet": triplet.to_dict()})


# ---------------------------------------------------------------------------
# Exponent from triplet
# ---------------------------------------------------------------------------


def compensated_phase(x: np.ndarray, compensate) -> np.ndarray:
    """``1 - exp(ix) + ix * compensate`` without cancellation at small ``x``."""
    x = np.asarray(x, dtype=float)
    re = 2 * np.sin(x / 2) ** 2
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    x_minus_sin = np.where(small, xs**3 / 6 - xs**5 / 120 + xs**7 / 5040, x - np.sin(x))
    im = np.where(compensate, x_minus_sin, -np.sin(x))
    return re + 1j * im


def symbol_from_triplet(triplet: LevyTriplet, xi, eps: float = DEFAULT_EPS,
                        periods: float = 64.0, r_cap: float = 1e8) -> Estimate:
    """Lévy-Khintchine exponent by quadrature over the jump measure.

    Jumps with ``|y| < eps`` enter through their second-order Taylor term
    ``(1/2) int (y.xi)^2 nu(dy)``; the third- and fourth-order remainders
    form the error bar.  Along each ray the oscillatory integrand is
    integrated out to ``periods`` oscillations past ``max(1, ...)`` and the
    remaining tail enters as ``nu``-mass (its oscillatory part is bounded by
    an integration-by-parts estimate added to the error bar).
    """
    d = triplet.dimension
    xi = np.asarray(xi, dtype=float).reshape(d)
    value = complex(-1j * (triplet.drift @ xi) + 0.5 * xi @ triplet.diffusion @ xi)
    meas = triplet.measure
    if meas.form == "zero" or not np.any(xi):
        return Estimate(value, 0.0)
    if not 0 < eps < 1:
        raise ValueError("cutoff eps must lie in (0, 1)")
    rays = ray_decomposition(meas, align=xi if d == 2 else None)
    s = rays.theta @ xi
    m2 = small_ball_moment(rays, 2.0, eps)
    m3 = small_ball_moment(rays, 3.0, eps)
    m4 = small_ball_moment(rays, 4.0, eps)
    value += 0.5 * np.dot(rays.omega, s**2 * m2)
    error = float(np.dot(rays.omega, np.abs(s) ** 3 * m3 / 6 + s**4 * m4 / 24))

    for j in range(len(s)):
        sj = s[j]
        if sj == 0.0:
            continue
        reach = min(max(2.0, 2 * np.pi * periods / abs(sj)), r_cap)
        one = rays.restrict(j)

        def integrand(r, th, sj=sj):
            return compensated_phase(r * sj, r < 1)

        part = integrate_rays(one, integrand, eps, reach, breakpoints=(1.0,))
        tail = tail_mass(one, reach)
        g_edge = float(one.density(np.array([[reach]]))[0, 0])
        value += rays.omega[j] * (part[0] + tail[0])
        error += rays.omega[j] * 2 * g_edge / abs(sj)
    return Estimate(complex(value), float(error))


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------


def _sample_directions(d: int, n_angles: int | None) -> np.ndarray:
    return default_directions(d, n_angles or 64)


def check_hartman_wintner(model: LevyModel, radii=None, n_angles: int = 64,
                          ratio_threshold: float = 10.0) -> VerificationReport:
    """Finite-sample proxy for ``Re psi(xi) / log|xi| -> infinity``.

    ``q(R) = min_theta Re psi(R theta) / log R`` must increase along the
    radii and grow by at least ``ratio_threshold``.  This is evidence, not a
    proof.
    """
    radii = np.asarray(radii if radii is not None else 10.0 ** np.arange(1, 7), dtype=float)
    if np.any(radii < 2) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing and >= 2")
    dirs = _sample_directions(model.dimension, n_angles)
    q = np.array([model.symbol(R * dirs).real.min() / math.log(R) for R in radii])
    increasing = bool(np.all(np.diff(q) > 0))
    ratio = float(q[-1] / q[0]) if q[0] > 0 else math.inf if q[-1] > 0 else 0.0
    passed = increasing and q[0] > 0 and ratio >= ratio_threshold
    return VerificationReport(
        "hartman_wintner", {"model": model.to_dict(), "radii": radii.tolist()},
        {"q": q.tolist(), "increasing": increasing, "ratio": ratio},
        {"ratio_threshold": ratio_threshold}, passed,
        notes="heuristic divergence proxy; not a proof")


def check_sector(model: LevyModel, sample=None) -> VerificationReport:
    """Smallest ``c`` with ``|Im psi| <= c Re psi`` on a sample excluding 0."""
    if sample is None:
        dirs = _sample_directions(model.dimension, 64)
        radii = np.geomspace(1e-2, 1e3, 31)
        sample = (radii[:, None, None] * dirs[None]).reshape(-1, model.dimension)
    sample = np.asarray(sample, dtype=float).reshape(-1, model.dimension)
    if np.any(np.all(sample == 0, axis=1)):
        raise ValueError("sample must exclude xi = 0")
    psi = model.symbol(sample)
    re, im = psi.real, np.abs(psi.imag)
    degenerate = bool(np.any((re <= 0) & (im > 0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(re > 0, im / re, np.where(im > 0, np.inf, 0.0))
    c0 = float(np.max(ratios))
    return VerificationReport(
        "sector_condition", {"model": model.to_dict(), "n_samples": int(len(sample))},
        {"c0": c0, "degenerate": degenerate}, None, not degenerate and math.isfinite(c0))


@dataclass(frozen=True)
class GrowthFit(ScalingFit):
    """Slope of ``log Re psi`` vs ``log |xi|`` plus two-sided comparability."""

    lower: float = math.nan
    upper: float = math.nan

    @property
    def alpha_hat(self) -> float:
        return self.slope

    def to_dict(self) -> dict:
        out = super().to_dict()
        out.update(alpha_hat=self.alpha_hat, lower=self.lower, upper=self.upper)
        return out


def fit_symbol_growth(model: LevyModel, radius_range=(1e2, 1e4), angular_samples=None,
                      n_radii: int = 25) -> GrowthFit:
    """Fit the growth index of ``Re psi`` over ``radius_range``.

    ``lower``/``upper`` are the min/max of ``Re psi(xi) / |xi|^alpha_hat``.
    """
    dirs = (np.asarray(angular_samples, dtype=float).reshape(-1, model.dimension)
            if angular_samples is not None else _sample_directions(model.dimension, 64))
    radii = np.geomspace(radius_range[0], radius_range[1], n_radii)
    pts = []
    ratios = []
    for R in radii:
        re = model.symbol(R * dirs).real
        pts.extend((R, v) for v in re)
    fit = fit_loglog(pts)
    arr = np.asarray(pts)
    ratios = arr[:, 1] / arr[:, 0] ** fit.slope
    return GrowthFit(fit.slope, fit.intercept, fit.residual, fit.points,
                     float(ratios.min()), float(ratios.max()))


def check_spectral_nondegeneracy(measure: LevyMeasure) -> VerificationReport:
    """Pass iff the spectral directions with positive weight span ``R^d``."""
    if measure.form != "polar":
        raise ValueError("non-degeneracy is defined for polar measures")
    dirs = measure.directions[measure.weights > 0]
    rank = int(np.linalg.matrix_rank(dirs, tol=1e-10)) if len(dirs) else 0
    return VerificationReport(
        "spectral_nondegeneracy", {"measure": measure.description},
        {"rank": rank, "dimension": measure.dimension}, None, rank == measure.dimension)


@dataclass(frozen=True)
class MomentTable:
    """Values of ``int_{eps<|y|<1} |y|^beta nu(dy)`` along decreasing ``eps``."""

    beta: float
    eps: tuple[float, ...]
    values: tuple[float, ...]
    converged: bool
    log_slope: float

    def rows(self):
        return list(zip(self.eps, self.values))


def small_jump_moment(measure: LevyMeasure, beta: float, eps_list=None,
                      rtol: float = 1e-3) -> MomentTable:
    """Tabulate the small-jump moment and classify convergence.

    ``converged`` applies the Cauchy criterion to successive values: the
    increments must be non-increasing over the second half of the table and
    the last one must be below ``rtol`` times the value.  ``log_slope`` is
    the slope of ``log value`` vs ``log eps`` over the second half (``~
    alpha - beta`` for a divergent stable moment).
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    eps = np.asarray(eps_list if eps_list is not None else 10.0 ** -np.arange(1, 31), dtype=float)
    if np.any(np.diff(eps) >= 0) or eps[0] >= 1:
        raise ValueError("eps_list must be decreasing and below 1")
    if measure.form == "zero":
        zeros = tuple(0.0 for _ in eps)
        return MomentTable(beta, tuple(eps.tolist()), zeros, True, 0.0)
    rays = ray_decomposition(measure)
    edges = np.concatenate([[1.0], eps])
    values = []
    acc = 0.0
    for hi, lo in zip(edges[:-1], edges[1:]):
        part = integrate_rays(rays, lambda r, th: r**beta, lo, hi)
        if not np.all(np.isfinite(part)) or np.any(part < -1e-300):
            raise QuadratureDivergence("malformed Lévy density")
        acc += float(np.dot(rays.omega, part))
        values.append(acc)
    vals = np.asarray(values)
    inc = np.abs(np.diff(vals))
    half = len(vals) // 2
    tail_inc = inc[half - 1:] if half >= 1 else inc
    converged = bool(len(inc) > 0 and np.all(np.diff(tail_inc) <= 1e-15 * vals[-1])
                     and inc[-1] <= rtol * abs(vals[-1]))
    if vals[half] > 0:
        slope = float(np.polyfit(np.log(eps[half:]), np.log(vals[half:]), 1)[0])
    else:
        slope = 0.0
    return MomentTable(beta, tuple(eps.tolist()), tuple(vals.tolist()), converged, slope)


# ---------------------------------------------------------------------------
# Model specification files
# ---------------------------------------------------------------------------

_BERNSTEIN = {
    "power": lambda p: (lambda lam: lam ** (p["alpha"] / 2)),
    "relativistic": lambda p: (lambda lam: (lam + p.get("mass", 1.0) ** (2 / p["alpha"]))
                               ** (p["alpha"] / 2) - p.get("mass", 1.0)),
    "log": lambda p: (lambda lam: np.log1p(lam)),
}


def _measure_from_dict(spec: dict, d: int) -> LevyMeasure:
    form = spec.get("form")
    if form == "zero":
        return LevyMeasure.zero(d)
    if form == "polar":
        return LevyMeasure.polar(spec["directions"], spec["weights"], spec["inner_index"],
                                 spec.get("outer_index"), spec.get("radius", 1.0))
    if form == "density":
        kind = spec.get("kind", "power")
        if kind != "power":
            raise ValueError(f"unsupported density kind {kind!r}")
        alpha = float(spec["index"])
        coeff = float(spec.get("coefficient", stable_density_constant(d, alpha)))
        return LevyMeasure.from_density(
            d, _power_density(d, alpha, coeff), isotropic=True,
            description={"form": "density", "kind": "power", "index": alpha,
                         "coefficient": coeff})
    raise ValueError(f"unknown measure form {form!r}")


_FAMILY_KEYS = {
    "isotropic_stable": {"alpha"},
    "cauchy": set(),
    "brownian": {"drift", "diffusion"},
    "sum_stable": {"alpha", "beta"},
    "relativistic_stable": {"alpha", "mass"},
    "subordinated_brownian": {"bernstein", "alpha", "mass", "index"},
    "anisotropic_stable": {"alpha", "directions", "weights"},
}


def model_from_dict(spec: dict) -> LevyModel:
    """Build a model from ``{family, d, params...}`` or ``{triplet: {...}}``.

    Unknown keys raise ``ValueError``.
    """
    spec = dict(spec)
    if "triplet" in spec:
        unknown = set(spec) - {"triplet", "d", "declared_index"}
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        t = spec["triplet"]
        unknown = set(t) - {"b", "Q", "measure"}
        if unknown:
            raise ValueError(f"unknown triplet keys: {sorted(unknown)}")
        d = int(spec.get("d", len(t.get("b", [0]))))
        meas = _measure_from_dict(t.get("measure", {"form": "zero"}), d)
        trip = LevyTriplet(t.get("b", np.zeros(d)), t.get("Q", np.zeros((d, d))), meas)
        return from_triplet(trip, spec.get("declared_index"))
    family = spec.pop("family", None)
    if family not in _FAMILY_KEYS:
        raise ValueError(f"unknown model family {family!r}")
    d = int(spec.pop("d", 1))
    unknown = set(spec) - _FAMILY_KEYS[family]
    if unknown:
        raise ValueError(f"unknown keys for {family}: {sorted(unknown)}")
    if family == "isotropic_stable":
        return isotropic_stable(float(spec["alpha"]), d)
    if family == "cauchy":
        return cauchy(d)
    if family == "brownian":
        return brownian(d, spec.get("drift"), spec.get("diffusion"))
    if family == "sum_stable":
        return sum_stable(float(spec["alpha"]), float(spec["beta"]), d)
    if family == "relativistic_stable":
        return relativistic_stable(float(spec["alpha"]), float(spec.get("mass", 1.0)), d)
    if family == "subordinated_brownian":
        kind = spec.get("bernstein", "power")
        if kind not in _BERNSTEIN:
            raise ValueError(f"unknown Bernstein function {kind!r}")
        f = _BERNSTEIN[kind](spec)
        idx = spec.get("index", spec.get("alpha") if kind != "log" else None)
        return subordinated_brownian(f, d, idx, kind)
    return anisotropic_stable(spec["directions"], spec["weights"], float(spec["alpha"]))
