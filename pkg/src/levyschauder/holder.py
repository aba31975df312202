"""Hölder-Zygmund norms and exponents from iterated differences.

All estimators sample finitely many ``(x, h)`` pairs, so the seminorms they
return are lower bounds for the true suprema.  Scales ``h`` are dyadic and,
in two dimensions, run along both axes and both diagonals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import comb

from .errors import DegenerateFit, MissingDerivative, OutOfDomain
from .reports import ScalingFit, VerificationReport, fit_loglog
from .spectral_grid import GridField, GridSpec

__all__ = [
    "HolderReport",
    "ExponentEstimate",
    "floor_order",
    "strict_floor",
    "iterated_difference",
    "difference_field",
    "zygmund_norm",
    "equivalent_norm",
    "check_norm_equivalence",
    "holder_exponent_estimate",
    "dyadic_scales",
    "spectral_derivative",
]

NOISE_FLOOR = 1e-10


def floor_order(alpha: float) -> int:
    """``floor(alpha)``; the difference order of the norm is this plus one."""
    return int(math.floor(alpha))


def strict_floor(alpha: float) -> int:
    """Largest integer ``k >= 0`` with ``k < alpha`` (0 for ``alpha <= 0``)."""
    return max(int(math.ceil(alpha)) - 1, 0)


def dyadic_scales(k_min: int = 0, k_max: int = 10) -> np.ndarray:
    return 2.0 ** -np.arange(k_min, k_max + 1)


@dataclass(frozen=True)
class HolderReport:
    """Sup norm, sampled seminorm and per-scale table at one order."""

    order: float
    sup_norm: float
    seminorm: float
    per_scale: tuple[tuple[float, float], ...]
    difference_order: int
    label: str = "zygmund"

    def __post_init__(self):
        if self.sup_norm < 0 or self.seminorm < 0:
            raise ValueError("norms must be non-negative")

    @property
    def total(self) -> float:
        return self.sup_norm + self.seminorm

    def to_dict(self) -> dict:
        return {"order": self.order, "sup_norm": self.sup_norm, "seminorm": self.seminorm,
                "total": self.total, "difference_order": self.difference_order,
                "label": self.label,
                "per_scale": [list(row) for row in self.per_scale]}

    def csv_rows(self):
        return [("h", "sup_difference")] + [tuple(r) for r in self.per_scale]


def _binomial(j: int) -> list[float]:
    if not 1 <= j <= 5:
        raise ValueError("difference order j must lie in 1..5")
    return [(-1.0) ** (j - i) * float(comb(j, i, exact=True)) for i in range(j + 1)]


def _dimension_of(f, x=None) -> int:
    if isinstance(f, GridField):
        return f.spec.dimension
    if hasattr(f, "dimension"):
        return f.dimension
    if x is not None:
        x = np.asarray(x, dtype=float)
        return 1 if x.ndim == 0 else x.shape[-1]
    return 1


def iterated_difference(f, x, h, j: int, centered: bool = False,
                        periodic: bool = True) -> float:
    """``Delta_h^j f(x) = sum_i (-1)^(j-i) C(j,i) f(x + i h)``.

    With ``centered=True`` the stencil is shifted to start at ``x - (j/2) h``
    (``j`` even).  For a :class:`GridField`, ``x`` must be a node and ``h`` a
    lattice vector; with ``periodic=False`` leaving the box raises
    :class:`OutOfDomain`.
    """
    coef = _binomial(j)
    d = _dimension_of(f, x)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(d)
    h = np.atleast_1d(np.asarray(h, dtype=float)).reshape(d)
    if centered:
        if j % 2:
            raise ValueError("centred differences need even j")
        x = x - (j // 2) * h
    if isinstance(f, GridField):
        sp = f.spec
        base = np.asarray(sp.index_of(x) if periodic else _raw_index(sp, x))
        step = h / sp.spacing
        k = np.rint(step)
        if np.any(np.abs(step - k) > 1e-9):
            raise ValueError("h must be a lattice vector")
        total = 0.0
        for i, c in enumerate(coef):
            idx = base + i * k.astype(int)
            if not periodic and (np.any(idx < 0) or np.any(idx >= sp.n)):
                raise OutOfDomain("stencil leaves the lattice")
            total += c * f.values[tuple(int(v) % sp.n for v in idx)]
        return float(np.real(total))
    pts = np.stack([x + i * h for i in range(j + 1)])
    vals = np.asarray(f(pts if d > 1 else pts[:, 0]), dtype=float).reshape(j + 1)
    return float(np.dot(coef, vals))


def _raw_index(sp: GridSpec, x: np.ndarray) -> np.ndarray:
    k = (x + sp.half_width) / sp.spacing
    idx = np.rint(k)
    if np.any(np.abs(k - idx) > 1e-9):
        raise ValueError("point is not a lattice node")
    if np.any(idx < 0) or np.any(idx >= sp.n):
        raise OutOfDomain("point lies outside the lattice")
    return idx.astype(int)


def difference_field(f: GridField, shift: Sequence[int], j: int) -> np.ndarray:
    """``Delta_h^j f`` on the whole periodic lattice for ``h = shift * dx``."""
    coef = _binomial(j)
    out = np.zeros_like(f.values)
    axes = tuple(range(f.spec.dimension))
    for i, c in enumerate(coef):
        out = out + c * np.roll(f.values, tuple(-i * s for s in shift), axis=axes)
    return out


def _directions(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0]])
    return np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]])


def _as_sample_points(x_samples, d: int) -> np.ndarray:
    x = np.asarray(x_samples, dtype=float)
    if d == 1:
        return x.reshape(-1, 1)
    return x.reshape(-1, d)


def _scale_table(f, j: int, h_scales, x_samples=None, delta: float | None = None):
    """Rows ``(|h|, sup_x |Delta_h^j f(x)|)`` and the sampled sup norm."""
    hs = np.asarray(h_scales if h_scales is not None else dyadic_scales(), dtype=float)
    if isinstance(f, GridField):
        sp = f.spec
        d = sp.dimension
        sup = float(np.max(np.abs(f.values)))
        rows = {}
        for h in hs:
            k = int(round(h / sp.spacing))
            if k < 1:
                continue
            for e in _directions(d).astype(int):
                shift = tuple(int(v) * k for v in e)
                size = k * sp.spacing * float(np.linalg.norm(e))
                if delta is not None and size >= delta:
                    continue
                val = float(np.max(np.abs(difference_field(f, shift, j))))
                rows[size] = max(rows.get(size, 0.0), val)
        return sorted(rows.items(), reverse=True), sup
    d = _dimension_of(f)
    if x_samples is None:
        raise ValueError("x_samples are required for evaluable functions")
    x = _as_sample_points(x_samples, d)
    fx = np.asarray(f(x if d > 1 else x[:, 0]), dtype=float).reshape(-1)
    sup = float(np.max(np.abs(fx)))
    coef = _binomial(j)
    rows = {}
    for h in hs:
        for e in _directions(d):
            hv = h * e
            size = float(np.linalg.norm(hv))
            if delta is not None and size >= delta:
                continue
            acc = coef[0] * fx
            for i in range(1, j + 1):
                pts = x + i * hv
                acc = acc + coef[i] * np.asarray(f(pts if d > 1 else pts[:, 0]),
                                                 dtype=float).reshape(-1)
            rows[size] = max(rows.get(size, 0.0), float(np.max(np.abs(acc))))
    return sorted(rows.items(), reverse=True), sup


def zygmund_norm(f, alpha: float, h_scales=None, x_samples=None) -> HolderReport:
    """Sampled ``C_b^alpha`` norm using differences of order ``floor(alpha) + 1``.

    Parameters
    ----------
    f : GridField or callable
        Lattice fields use every node as a base point and periodic shifts;
        scales are rounded to the nearest positive lattice multiple.
    alpha : float
        Order ``>= 0``.
    h_scales : sequence of float, optional
        Dyadic scales; default ``2^-k``, ``k = 0..10``.
    x_samples : array, optional
        Base points for callables.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    j = floor_order(alpha) + 1
    rows, sup = _scale_table(f, j, h_scales, x_samples)
    semi = max((v / h**alpha for h, v in rows), default=0.0)
    return HolderReport(float(alpha), sup, float(semi), tuple(rows), j)


def spectral_derivative(f: GridField, beta) -> GridField:
    """``d^beta f`` of a lattice field by the multiplier ``(i xi)^beta``."""
    xi = f.spec.frequencies()
    m = np.ones(f.spec.shape, dtype=complex)
    for j, b in enumerate(np.atleast_1d(beta)):
        if b:
            m = m * (1j * xi[..., j]) ** int(b)
    out = np.fft.ifftn(np.fft.fftn(f.values) * m)
    return GridField(f.spec, out.real)


def _multi_indices(d: int, max_order: int):
    out = []
    for n in range(max_order + 1):
        if d == 1:
            out.append((n,))
        else:
            out.extend((a, n - a) for a in range(n, -1, -1))
    return out


def equivalent_norm(f, alpha: float, k: int, ell: int, h_scales=None, x_samples=None,
                    delta: float = 1.0) -> HolderReport:
    """Norm built from ``ell`` derivatives and ``k``-th differences.

    ``sum_{|b|<=ell} ||d^b f||_inf + sum_{|b|<=ell} sup_{x, 0<|h|<delta}
    |Delta_h^k d^b f(x)| / |h|^(alpha - ell)``.  Lattice fields are
    differentiated spectrally; callables must provide ``derivative(beta)``.
    """
    if not ell < alpha < ell + k:
        raise ValueError("need ell < alpha < ell + k")
    d = _dimension_of(f)
    sup_part = 0.0
    semi_part = 0.0
    rows_all: dict[float, float] = {}
    for beta in _multi_indices(d, ell):
        if isinstance(f, GridField):
            g = spectral_derivative(f, beta) if any(beta) else f
        elif any(beta):
            if not hasattr(f, "derivative"):
                raise MissingDerivative(f"derivative {beta} unavailable")
            g = f.derivative(beta)
        else:
            g = f
        rows, sup = _scale_table(g, k, h_scales, x_samples, delta=delta)
        sup_part += sup
        semi_part += max((v / h ** (alpha - ell) for h, v in rows), default=0.0)
        for h, v in rows:
            rows_all[h] = max(rows_all.get(h, 0.0), v)
    return HolderReport(float(alpha), sup_part, semi_part,
                        tuple(sorted(rows_all.items(), reverse=True)), k, "equivalent")


def check_norm_equivalence(f, alpha: float, k: int, ell: int, h_scales=None,
                           x_samples=None, factor: float = 10.0) -> VerificationReport:
    """The two norm definitions must agree within ``factor`` either way."""
    a = zygmund_norm(f, alpha, h_scales, x_samples)
    b = equivalent_norm(f, alpha, k, ell, h_scales, x_samples)
    if a.total == 0 and b.total == 0:
        ratio = 1.0
    elif a.total == 0:
        ratio = math.inf
    else:
        ratio = b.total / a.total
    return VerificationReport("norm_equivalence", {"alpha": alpha, "k": k, "ell": ell},
                              {"zygmund": a.total, "equivalent": b.total, "ratio": ratio},
                              {"factor": factor}, 1 / factor <= ratio <= factor)


class ExponentEstimate(NamedTuple):
    alpha_hat: float
    fit: ScalingFit | None
    saturated: bool

    def __float__(self):
        return float(self.alpha_hat)


def holder_exponent_estimate(f, h_scales, x_samples=None, j: int = 2,
                             noise_floor: float = NOISE_FLOOR) -> ExponentEstimate:
    """Slope of ``log sup_x |Delta_h^j f|`` against ``log |h|``.

    Only scales whose value exceeds ``noise_floor`` enter the fit.  If fewer
    than four survive, the differences have vanished (``f`` is polynomial of
    degree ``< j`` on the samples) and the estimate saturates at ``j``.
    """
    hs = np.asarray(h_scales, dtype=float)
    if len(hs) < 6:
        raise DegenerateFit("at least 6 scales are required")
    rows, _ = _scale_table(f, j, hs, x_samples)
    pts = [(h, v) for h, v in rows if v > noise_floor]
    if len(pts) < 4:
        return ExponentEstimate(float(j), None, True)
    fit = fit_loglog(pts)
    return ExponentEstimate(float(fit.slope), fit, False)
