"""Transition densities on periodic lattices by discrete Fourier inversion.

Conventions
-----------
A lattice of ``N`` points per axis covers ``[-L, L)^d`` with spacing
``dx = 2L/N`` and nodes ``x_n = -L + n dx``.  The dual lattice has spacing
``pi/L`` and Nyquist radius ``pi N/(2L)``.  For a lattice function ``f`` the
transform is ``f^(xi) = sum_n f(x_n) exp(-i xi.x_n)``; with this convention
the semigroup acts as the multiplier ``exp(-t psi(xi))`` and the generator as
``-psi(xi)``.

The inverse transform of ``exp(-t psi(-xi))`` on the dual lattice yields the
``2L``-periodisation of ``p_t`` (up to frequency truncation), so lattice masses
are exact and heavy tails reappear as images from neighbouring periods.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import AliasingError
from .levy_models import LevyModel, check_hartman_wintner, default_directions
from .reports import ScalingFit, VerificationReport, fit_loglog

__all__ = [
    "GridSpec",
    "GridField",
    "DensityResult",
    "GradientFit",
    "select_grid",
    "density",
    "density_partial",
    "apply_multiplier",
    "l1_norm",
    "gradient_l1_curve",
    "fit_gradient_exponent",
    "check_chapman_kolmogorov",
    "check_second_derivative_bound",
    "extend_gradient_estimate",
    "fourier_lower_bound",
    "check_fourier_lower_bound",
    "default_t_list",
    "tail_estimate",
]

ALIAS_THRESHOLD = 1e-6
TAIL_THRESHOLD = 1e-4
DEFAULT_N = {1: 4096, 2: 512}
N_CAP = {1: 2**14, 2: 1024}


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice on ``[-L, L)^d``."""

    dimension: int
    n: int
    half_width: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError("points per axis must be a power of two >= 64")
        if not self.half_width > 0:
            raise ValueError("half width must be positive")

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def nyquist_radius(self) -> float:
        return np.pi * self.n / (2 * self.half_width)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dimension

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    def frequency_axis(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def points(self) -> np.ndarray:
        """Lattice nodes as an array of shape ``(N, ..., N, d)``."""
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.dimension), indexing="ij"), axis=-1)

    def frequencies(self) -> np.ndarray:
        """Dual lattice in FFT order, shape ``(N, ..., N, d)``."""
        k = self.frequency_axis()
        return np.stack(np.meshgrid(*([k] * self.dimension), indexing="ij"), axis=-1)

    def index_of(self, x) -> tuple[int, ...]:
        """Lattice index of the node ``x`` (must lie on the lattice)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = (x + self.half_width) / self.spacing
        idx = np.rint(k)
        if np.any(np.abs(k - idx) > 1e-9):
            raise ValueError("point is not a lattice node")
        return tuple(int(i) % self.n for i in idx)

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same box, ``factor`` times as many points per axis."""
        return GridSpec(self.dimension, self.n * factor, self.half_width)

    def to_dict(self) -> dict:
        return {"d": self.dimension, "N": self.n, "L": self.half_width}


@dataclass(frozen=True)
class GridField:
    """Values of a function on the nodes of a :class:`GridSpec`."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.spec.shape:
            raise ValueError(f"values must have shape {self.spec.shape}, got {v.shape}")
        if np.isnan(v).any():
            raise ValueError("GridField values must be NaN-free")
        object.__setattr__(self, "values", v)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @classmethod
    def from_function(cls, spec: GridSpec, f: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        """Sample ``f`` (taking points of shape ``(..., d)``) on the lattice.

        Elementwise callables that return one value per coordinate in one
        dimension (shape ``(N, 1)``) are accepted as well.
        """
        vals = np.asarray(f(spec.points()))
        if vals.shape != spec.shape and vals.size == int(np.prod(spec.shape)):
            vals = vals.reshape(spec.shape)
        return cls(spec, vals)

    def reflect(self) -> "GridField":
        """The field ``x -> value(-x)``; index map ``n -> (N - n) mod N``."""
        v = self.values
        for ax in range(v.ndim):
            v = np.roll(np.flip(v, axis=ax), 1, axis=ax)
        return GridField(self.spec, v)

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.spec, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self.spec, self.values - other.values)

    def scaled(self, c) -> "GridField":
        return GridField(self.spec, c * self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def value_at(self, x) -> float:
        return self.values[self.spec.index_of(x)]


class DensityResult(NamedTuple):
    field: GridField
    diagnostics: dict


def apply_multiplier(f: GridField, multiplier: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                     real: bool = True) -> GridField:
    """Apply the Fourier multiplier ``m(xi)`` to a lattice function.

    ``multiplier`` is either a callable on the dual lattice (shape
    ``(..., d)``) or a precomputed array in FFT order.
    """
    m = multiplier(f.spec.frequencies()) if callable(multiplier) else multiplier
    out = np.fft.ifftn(np.fft.fftn(f.values) * m)
    return GridField(f.spec, out.real if real else out)


def _phase(spec: GridSpec) -> np.ndarray:
    # exp(i xi_k . (-L)) = (-1)^(k_1 + ... + k_d) in FFT order
    k = np.arange(spec.n)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    out = sign
    for _ in range(spec.dimension - 1):
        out = np.multiply.outer(out, sign)
    return out


def _invert(spec: GridSpec, mult: np.ndarray) -> np.ndarray:
    # (1/(2L)^d) sum_k mult_k exp(i xi_k x_n)
    return (np.fft.ifftn(mult * _phase(spec)) / spec.cell_volume).real


def _spectrum(f: GridField) -> np.ndarray:
    # inverse of _invert: recovers mult_k from a lattice density
    return np.fft.fftn(f.values) * _phase(f.spec) * f.spec.cell_volume


def _nyquist_ratio(spec: GridSpec, weight: np.ndarray) -> float:
    # largest |weight| on the boundary shell of the dual lattice, relative to the peak
    w = np.abs(weight)
    peak = w.max()
    if peak == 0:
        return 0.0
    edge = np.zeros(spec.shape, dtype=bool)
    for ax in range(spec.dimension):
        sl = [slice(None)] * spec.dimension
        sl[ax] = spec.n // 2
        edge[tuple(sl)] = True
    return float(w[edge].max() / peak)


def _multi_index(beta, d: int) -> tuple[int, ...]:
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if len(beta) != d or any(b < 0 for b in beta):
        raise ValueError(f"multi-index must have {d} non-negative entries")
    if sum(beta) > 4:
        raise ValueError("derivative order |beta| must be at most 4")
    return beta


# ---------------------------------------------------------------------------
# Grid selection
# ---------------------------------------------------------------------------


def _log_radii(lo: float, hi: float, n: int = 4001) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def _time_scale(model: LevyModel, t: float, dirs: np.ndarray) -> float:
    """Smallest ``R0`` over directions with ``t Re psi(R0 theta) = 1``."""
    radii = _log_radii(1e-12, 1e12)
    re = t * model.symbol(radii[:, None, None] * dirs[None]).real  # (nR, ndir)
    best = math.inf
    for j in range(dirs.shape[0]):
        above = np.nonzero(re[:, j] >= 1)[0]
        if above.size == 0:
            continue
        i = above[0]
        if i == 0:
            best = min(best, radii[0])
            continue
        g = lambda R: t * model.symbol(R * dirs[j][None])[0].real - 1
        best = min(best, optimize.brentq(g, radii[i - 1], radii[i], xtol=1e-14, rtol=1e-13))
    if not math.isfinite(best):
        raise AliasingError("t Re psi never reaches 1: the exponent is too weak to grid")
    return best


def _alias_radius(model: LevyModel, t: float, dirs: np.ndarray, order: int,
                  r0: float, threshold: float) -> float:
    radii = _log_radii(r0 * 1e-6, r0 * 1e9, 6001)
    re = t * model.symbol(radii[:, None, None] * dirs[None]).real
    with np.errstate(divide="ignore"):
        logw = order * np.log(radii)[:, None] - re
    prof = logw.max(axis=1)
    rel = prof - prof.max()
    ipk = int(np.argmax(prof))
    below = np.nonzero(rel[ipk:] > math.log(threshold))[0]
    last = ipk + (below[-1] if below.size else 0)
    if last + 1 >= len(radii):
        raise AliasingError("multiplier does not decay: no alias-safe Nyquist radius")
    return float(radii[last + 1])


def tail_estimate(model: LevyModel, t: float, half_width: float) -> float:
    """``t sup_{|xi| <= 1/L} |psi(xi)|``, a proxy for ``P(|X_t| > L)``."""
    dirs = default_directions(model.dimension, 64)
    probe = np.geomspace(1e-3, 1.0, 16) / half_width
    return float(t * np.abs(model.symbol(probe[:, None, None] * dirs[None])).max())


def select_grid(model: LevyModel, t: float, n: int | None = None, order: int = 1,
                points_per_scale: float = 16.0, n_cap: int | None = None,
                threshold: float = ALIAS_THRESHOLD) -> tuple[GridSpec, dict]:
    """Choose ``(N, L)`` for the density of ``model`` at time ``t``.

    The natural length scale is ``s = 1/R0`` with ``t Re psi(R0) = 1``.  The
    half width is the smaller of the alias-safe value (Nyquist radius beyond
    which ``|xi|^order exp(-t Re psi)`` stays below ``threshold`` of its peak)
    and the resolution value (``points_per_scale`` nodes per ``s``).  ``N`` is
    doubled up to ``n_cap`` while the tail estimate
    ``t sup_{|xi| <= 1/L} |psi(xi)|`` exceeds ``1e-4``; the final estimate is
    reported in the diagnostics.

    For stable families ``L`` is proportional to ``t^(1/alpha)``, so lattices
    at different times are exact rescalings of one another.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    d = model.dimension
    n = n or DEFAULT_N[d]
    n_cap = max(n_cap or N_CAP[d], n)
    dirs = default_directions(d, 64)
    r0 = _time_scale(model, t, dirs)
    s = 1.0 / r0
    r_alias = _alias_radius(model, t, dirs, order, r0, threshold)
    while True:
        l_alias = np.pi * n / (2 * r_alias)
        l_res = n * s / (2 * points_per_scale)
        half = min(l_alias, l_res)
        tail = tail_estimate(model, t, half)
        if tail <= TAIL_THRESHOLD or n * 2 > n_cap:
            break
        n *= 2
    spec = GridSpec(d, n, float(half))
    return spec, {"scale": s, "alias_radius": r_alias, "L_alias": l_alias,
                  "L_resolution": l_res, "tail_estimate": tail,
                  "tail_ok": tail <= TAIL_THRESHOLD}


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

_HW_CACHE: dict = {}


def _hw_warning(model: LevyModel) -> None:
    key = id(model)
    if key not in _HW_CACHE:
        _HW_CACHE[key] = bool(check_hartman_wintner(model))
    if not _HW_CACHE[key]:
        warnings.warn("model fails the Hartman-Wintner divergence proxy; the density "
                      "may not exist", RuntimeWarning, stacklevel=3)


def _density_multiplier(model: LevyModel, t: float, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    xi = spec.frequencies()
    return xi, np.exp(-t * model.symbol(-xi))


def density(model: LevyModel, t: float, spec: GridSpec | None = None) -> DensityResult:
    """Transition density ``p_t`` on a lattice with diagnostics.

    Diagnostics: ``mass_error`` (|lattice mass - 1|), ``min_value``,
    ``tail_mass_estimate`` (``t sup_{|xi|<=1/L}|psi|``) and ``nyquist_ratio``.

    Raises
    ------
    AliasingError
        If ``|exp(-t psi)|`` on the Nyquist shell exceeds ``1e-6``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    _hw_warning(model)
    if spec is None:
        spec, _ = select_grid(model, t, order=0)
    xi, mult = _density_multiplier(model, t, spec)
    ratio = _nyquist_ratio(spec, mult)
    if ratio > ALIAS_THRESHOLD:
        raise AliasingError(f"|exp(-t psi)| = {ratio:.3g} on the Nyquist shell; enlarge N or L")
    p = GridField(spec, _invert(spec, mult))
    mass = float(p.values.sum() * spec.cell_volume)
    tail = tail_estimate(model, t, spec.half_width)
    diag = {"mass_error": abs(mass - 1.0), "min_value": float(p.values.min()),
            "tail_mass_estimate": tail, "nyquist_ratio": ratio}
    return DensityResult(p, diag)


def density_partial(model: LevyModel, t: float, beta, spec: GridSpec | None = None) -> GridField:
    """``d^beta p_t`` as the inverse transform of ``(i xi)^beta exp(-t psi(-xi))``.

    The aliasing threshold applies to ``|xi|^|beta| exp(-t Re psi)`` relative
    to its maximum over the lattice.
    """
    beta = _multi_index(beta, model.dimension)
    if spec is None:
        spec, _ = select_grid(model, t, order=max(sum(beta), 0))
    xi, mult = _density_multiplier(model, t, spec)
    factor = np.ones(spec.shape, dtype=complex)
    for j, b in enumerate(beta):
        if b:
            factor = factor * (1j * xi[..., j]) ** b
    weighted = factor * mult
    r = np.sqrt((xi**2).sum(-1))
    ratio = _nyquist_ratio(spec, r ** sum(beta) * np.abs(mult))
    if ratio > ALIAS_THRESHOLD:
        raise AliasingError(f"derivative multiplier ratio {ratio:.3g} on the Nyquist shell")
    return GridField(spec, _invert(spec, weighted))


def l1_norm(f: GridField) -> float:
    """Rectangle-rule ``L^1`` norm: ``sum |values| * dx^d``."""
    return float(np.abs(f.values).sum() * f.spec.cell_volume)


def _unit(d: int, j: int) -> tuple[int, ...]:
    e = [0] * d
    e[j] = 1
    return tuple(e)


def default_t_list(t_min: float = 1e-2, t_max: float = 1.0, per_decade: int = 12) -> np.ndarray:
    """Log-spaced times, ``per_decade`` points per decade."""
    n = max(4, int(round(per_decade * math.log10(t_max / t_min))) + 1)
    return np.geomspace(t_min, t_max, n)


def gradient_l1_curve(model: LevyModel, t_list: Sequence[float],
                      spec: GridSpec | None = None, n: int | None = None) -> list[tuple[float, float]]:
    """``(t, sum_j ||d_j p_t||_1)`` for each ``t``.

    Without ``spec`` a lattice is selected per ``t`` (see :func:`select_grid`).
    """
    out = []
    for t in t_list:
        sp = spec or select_grid(model, float(t), n=n, order=1)[0]
        total = sum(l1_norm(density_partial(model, float(t), _unit(model.dimension, j), sp))
                    for j in range(model.dimension))
        out.append((float(t), total))
    return out


@dataclass(frozen=True)
class GradientFit(ScalingFit):
    """Fit of ``log ||grad p_t||_1`` against ``log t``."""

    @property
    def alpha_hat(self) -> float:
        return -1.0 / self.slope

    @property
    def m_hat(self) -> float:
        return math.exp(self.intercept)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out.update(alpha_hat=self.alpha_hat, M_hat=self.m_hat)
        return out


def fit_gradient_exponent(curve) -> GradientFit:
    """Least squares on ``(log t, log value)``; ``alpha_hat = -1/slope``."""
    fit = fit_loglog(curve)
    return GradientFit(fit.slope, fit.intercept, fit.residual, fit.points)


# ---------------------------------------------------------------------------
# Chapman-Kolmogorov machinery
# ---------------------------------------------------------------------------


def check_chapman_kolmogorov(model: LevyModel, t: float, spec: GridSpec | None = None,
                             tol: float = 1e-6) -> VerificationReport:
    """``||p_{2t} - p_t * p_t||_1`` with the convolution done in frequency."""
    if spec is None:
        spec, _ = select_grid(model, t, order=0)
    p_t = density(model, t, spec).field
    p_2t = density(model, 2 * t, spec).field
    conv = GridField(spec, _invert(spec, _spectrum(p_t) ** 2))
    resid = l1_norm(p_2t - conv)
    return VerificationReport("chapman_kolmogorov",
                              {"model": model.to_dict(), "t": t, "grid": spec.to_dict()},
                              {"l1_residual": resid}, tol, resid <= tol)


def check_second_derivative_bound(model: LevyModel, t: float, spec: GridSpec | None = None,
                                  slack: float = 1e-3) -> VerificationReport:
    """``||d_i d_j p_{2t}||_1 <= (max_j ||d_j p_t||_1)^2`` for all ``i, j``."""
    d = model.dimension
    if spec is None:
        spec, _ = select_grid(model, t, order=2)
    first = [l1_norm(density_partial(model, t, _unit(d, j), spec)) for j in range(d)]
    bound = max(first) ** 2
    second = {}
    for i in range(d):
        for j in range(i, d):
            beta = [0] * d
            beta[i] += 1
            beta[j] += 1
            second[f"{i}{j}"] = l1_norm(density_partial(model, 2 * t, tuple(beta), spec))
    worst = max(second.values())
    return VerificationReport("second_derivative_bound",
                              {"model": model.to_dict(), "t": t, "grid": spec.to_dict()},
                              {"first_order": first, "second_order": second, "bound": bound},
                              slack, worst <= bound * (1 + slack))


def extend_gradient_estimate(M: float, T: float, alpha: float):
    """Constant ``m = log 2 / (alpha T)`` extending the gradient bound past ``T``.

    Returns ``(m, verifier)``; ``verifier(model, s_list, spec=None)`` checks
    ``sum_j ||d_j p_s||_1 <= M exp(m s) s^(-1/alpha)`` at every ``s``.
    """
    if not (M > 0 and T > 0 and 0 < alpha <= 2):
        raise ValueError("need M, T > 0 and alpha in (0, 2]")
    m = math.log(2.0) / (alpha * T)

    def verifier(model: LevyModel, s_list, spec: GridSpec | None = None,
                 rtol: float = 1e-6) -> VerificationReport:
        curve = gradient_l1_curve(model, s_list, spec)
        bounds = [M * math.exp(m * s) * s ** (-1 / alpha) for s, _ in curve]
        ok = all(v <= b * (1 + rtol) for (_, v), b in zip(curve, bounds))
        return VerificationReport("extended_gradient_estimate",
                                  {"model": model.to_dict(), "M": M, "T": T, "alpha": alpha,
                                   "s": [s for s, _ in curve]},
                                  {"m": m, "values": [v for _, v in curve], "bounds": bounds},
                                  rtol, ok)

    return m, verifier


def fourier_lower_bound(model: LevyModel, t: float, spec: GridSpec | None = None,
                        per_coordinate: bool = False):
    """``max_j sup_k |xi_j exp(-t psi(xi_k))|`` over the dual lattice."""
    if spec is None:
        spec, _ = select_grid(model, t, order=1)
    xi = spec.frequencies()
    mod = np.abs(np.exp(-t * model.symbol(xi)))
    per = [float(np.max(np.abs(xi[..., j]) * mod)) for j in range(model.dimension)]
    return per if per_coordinate else max(per)


def check_fourier_lower_bound(model: LevyModel, t: float, spec: GridSpec | None = None,
                              tol: float = 1e-6) -> VerificationReport:
    """Per coordinate, the Fourier sup never exceeds ``||d_j p_t||_1``."""
    if spec is None:
        spec, _ = select_grid(model, t, order=1)
    lower = fourier_lower_bound(model, t, spec, per_coordinate=True)
    l1 = [l1_norm(density_partial(model, t, _unit(model.dimension, j), spec))
          for j in range(model.dimension)]
    ok = all(a <= b + tol for a, b in zip(lower, l1))
    return VerificationReport("fourier_lower_bound",
                              {"model": model.to_dict(), "t": t, "grid": spec.to_dict()},
                              {"fourier_sup": lower, "gradient_l1": l1}, tol, ok)
