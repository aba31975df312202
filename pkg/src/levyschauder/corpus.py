"""Evaluable test functions with known regularity.

Every function accepts points of shape ``(..., d)`` (or plain arrays in
``d = 1``) and exposes ``derivative(beta)`` for the multi-indices it
supports, so operators that need exact gradients and Hessians do not fall
back on finite differences.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import hermite_e

from .errors import MissingDerivative

__all__ = [
    "TestFunction",
    "GaussianBump",
    "PolynomialBump",
    "Cosine",
    "AbsKink",
    "Weierstrass",
    "WeierstrassBump",
    "SmoothStep",
    "Constant",
    "as_points",
    "gradient",
    "hessian",
    "build_function",
]


def as_points(x, d: int) -> np.ndarray:
    """Coerce ``x`` to an array of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}")
    return x


class TestFunction:
    """Base class: callable on ``(..., d)`` points with optional derivatives."""

    __test__ = False  # not a pytest class
    dimension: int = 1
    smoothness: float = math.inf  # Hölder-Zygmund order (inf: smooth)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(as_points(x, self.dimension))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, beta):
        """Callable ``d^beta f``; raises :class:`MissingDerivative` if unknown."""
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if not any(beta):
            return self
        raise MissingDerivative(f"{type(self).__name__} has no derivative {beta}")

    def to_dict(self) -> dict:
        return {"kind": type(self).__name__}


def _unit(d, j, k=None):
    e = [0] * d
    e[j] += 1
    if k is not None:
        e[k] += 1
    return tuple(e)


def gradient(f, x) -> np.ndarray:
    """Gradient of ``f`` at points ``x`` (shape ``(..., d)``)."""
    d = getattr(f, "dimension", np.shape(x)[-1])
    x = as_points(x, d)
    return np.stack([np.asarray(f.derivative(_unit(d, j))(x)) for j in range(d)], axis=-1)


def hessian(f, x) -> np.ndarray:
    d = getattr(f, "dimension", np.shape(x)[-1])
    x = as_points(x, d)
    rows = [np.stack([np.asarray(f.derivative(_unit(d, i, j))(x)) for j in range(d)], axis=-1)
            for i in range(d)]
    return np.stack(rows, axis=-2)


class _Derived(TestFunction):
    def __init__(self, parent, beta):
        self.parent, self.beta = parent, beta
        self.dimension = parent.dimension

    def evaluate(self, x):
        return self.parent._deriv(x, self.beta)


class Constant(TestFunction):
    def __init__(self, value: float = 1.0, d: int = 1):
        self.value, self.dimension = float(value), d

    def evaluate(self, x):
        return np.full(x.shape[:-1], self.value)

    def derivative(self, beta):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if not any(beta):
            return self
        return Constant(0.0, self.dimension)

    def to_dict(self):
        return {"kind": "constant", "value": self.value, "d": self.dimension}


class GaussianBump(TestFunction):
    """``A exp(-|x - c|^2 / (2 sigma^2))`` with derivatives of every order."""

    def __init__(self, center=0.0, width: float = 1.0, amplitude: float = 1.0, d: int = 1):
        self.dimension = d
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (d,)).copy()
        self.width, self.amplitude = float(width), float(amplitude)

    def evaluate(self, x):
        return self._deriv(x, (0,) * self.dimension)

    def _deriv(self, x, beta):
        u = (x - self.center) / self.width
        out = self.amplitude * np.ones(x.shape[:-1])
        for i, b in enumerate(beta):
            coef = np.zeros(b + 1)
            coef[b] = 1.0
            out = out * (-1.0 / self.width) ** b * hermite_e.hermeval(u[..., i], coef) \
                * np.exp(-u[..., i] ** 2 / 2)
        return out

    def derivative(self, beta):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        return self if not any(beta) else _Derived(self, beta)

    def to_dict(self):
        return {"kind": "gaussian", "center": self.center.tolist(), "width": self.width,
                "amplitude": self.amplitude, "d": self.dimension}


class PolynomialBump(TestFunction):
    """``(1 - |x - c|^2/a^2)_+^m``: a ``C^{m-1,1}`` bump with compact support."""

    def __init__(self, radius: float = 1.0, power: int = 3, center=0.0, d: int = 1):
        self.dimension, self.radius, self.power = d, float(radius), int(power)
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (d,)).copy()
        self.smoothness = float(power)

    def evaluate(self, x):
        return self._deriv(x, (0,) * self.dimension)

    def _deriv(self, x, beta):
        a2, m = self.radius**2, self.power
        y = x - self.center
        w = 1 - np.sum(y * y, axis=-1) / a2
        inside = w > 0
        wp = np.where(inside, w, 0.0)
        order = sum(beta)
        if order == 0:
            return wp**m
        idx = [i for i, b in enumerate(beta) for _ in range(b)]
        if order == 1:
            return m * wp ** (m - 1) * (-2 * y[..., idx[0]] / a2)
        if order == 2:
            i, j = idx
            out = m * (m - 1) * wp ** max(m - 2, 0) * 4 * y[..., i] * y[..., j] / a2**2
            if i == j:
                out = out - 2 * m * wp ** (m - 1) / a2
            return np.where(inside, out, 0.0)
        raise MissingDerivative("polynomial bump derivatives are provided up to order 2")

    def derivative(self, beta):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if sum(beta) > min(2, self.power):
            raise MissingDerivative(f"no derivative {beta} for a power-{self.power} bump")
        return self if not any(beta) else _Derived(self, beta)

    def to_dict(self):
        return {"kind": "polynomial_bump", "radius": self.radius, "power": self.power,
                "center": self.center.tolist(), "d": self.dimension}


class Cosine(TestFunction):
    """``A cos(k.x)``."""

    def __init__(self, frequency=1.0, amplitude: float = 1.0, d: int = 1):
        self.dimension = d
        self.frequency = np.broadcast_to(np.asarray(frequency, dtype=float), (d,)).copy()
        self.amplitude = float(amplitude)

    def evaluate(self, x):
        return self._deriv(x, (0,) * self.dimension)

    def _deriv(self, x, beta):
        n = sum(beta)
        phase = x @ self.frequency + n * np.pi / 2
        return self.amplitude * np.prod(self.frequency ** np.asarray(beta)) * np.cos(phase)

    def derivative(self, beta):
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        return self if not any(beta) else _Derived(self, beta)

    def to_dict(self):
        return {"kind": "cosine", "frequency": self.frequency.tolist(),
                "amplitude": self.amplitude, "d": self.dimension}


class AbsKink(TestFunction):
    """``|x - c| * exp(-|x - c|^2 / (2 s^2))`` (``s = inf``: the bare ``|x|``)."""

    smoothness = 1.0

    def __init__(self, center=0.0, envelope: float = math.inf, d: int = 1):
        self.dimension = d
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (d,)).copy()
        self.envelope = float(envelope)

    def evaluate(self, x):
        r = np.sqrt(np.sum((x - self.center) ** 2, axis=-1))
        if math.isinf(self.envelope):
            return r
        return r * np.exp(-r**2 / (2 * self.envelope**2))

    def to_dict(self):
        return {"kind": "abs_kink", "center": self.center.tolist(),
                "envelope": None if math.isinf(self.envelope) else self.envelope,
                "d": self.dimension}


class Weierstrass(TestFunction):
    """``sum_{k<=K} a^k cos(b^k x_1)`` with Hölder exponent ``-log a / log b``."""

    def __init__(self, a: float = 0.5, b: float = 3.0, terms: int = 21, d: int = 1):
        self.a, self.b, self.terms, self.dimension = float(a), float(b), int(terms), d
        self.smoothness = -math.log(self.a) / math.log(self.b)

    def evaluate(self, x):
        u = x[..., 0]
        return sum(self.a**k * np.cos(self.b**k * u) for k in range(self.terms))

    def to_dict(self):
        return {"kind": "weierstrass", "a": self.a, "b": self.b, "terms": self.terms,
                "d": self.dimension}


class WeierstrassBump(TestFunction):
    """Weierstrass series (in ``x_1``) modulated by a Gaussian envelope."""

    def __init__(self, a: float = 0.5, b: float = 3.0, terms: int = 12, width: float = 1.0,
                 d: int = 1):
        self.series = Weierstrass(a, b, terms, d)
        self.envelope = GaussianBump(0.0, width, 1.0, d)
        self.dimension = d
        self.smoothness = self.series.smoothness

    def evaluate(self, x):
        return self.series.evaluate(x) * self.envelope.evaluate(x)

    def to_dict(self):
        out = self.series.to_dict()
        out.update(kind="weierstrass_bump", width=self.envelope.width)
        return out


class SmoothStep(TestFunction):
    """Step in ``x_1`` smoothed linearly over ``cells`` lattice cells of width ``dx``.

    ``sign(x_1)`` on ``|x_1| > cells*dx/2`` times a Gaussian envelope, so the
    function decays on a periodic box.
    """

    smoothness = 0.0

    def __init__(self, dx: float, cells: int = 1, envelope: float = 4.0, d: int = 1):
        self.dx, self.cells, self.envelope, self.dimension = float(dx), int(cells), \
            float(envelope), d

    def evaluate(self, x):
        w = self.cells * self.dx / 2
        s = np.clip(x[..., 0] / w, -1.0, 1.0)
        r2 = np.sum(x * x, axis=-1)
        return s * np.exp(-r2 / (2 * self.envelope**2))

    def to_dict(self):
        return {"kind": "smooth_step", "dx": self.dx, "cells": self.cells,
                "envelope": self.envelope, "d": self.dimension}


_KINDS = {
    "gaussian": lambda p, d: GaussianBump(p.get("center", 0.0), p.get("width", 1.0),
                                          p.get("amplitude", 1.0), d),
    "polynomial_bump": lambda p, d: PolynomialBump(p.get("radius", 1.0), p.get("power", 3),
                                                   p.get("center", 0.0), d),
    "cosine": lambda p, d: Cosine(p.get("frequency", 1.0), p.get("amplitude", 1.0), d),
    "abs_kink": lambda p, d: AbsKink(p.get("center", 0.0),
                                     p.get("envelope") or math.inf, d),
    "weierstrass": lambda p, d: Weierstrass(p.get("a", 0.5), p.get("b", 3.0),
                                            p.get("terms", 21), d),
    "weierstrass_bump": lambda p, d: WeierstrassBump(p.get("a", 0.5), p.get("b", 3.0),
                                                     p.get("terms", 12), p.get("width", 1.0), d),
    "constant": lambda p, d: Constant(p.get("value", 1.0), d),
    "smooth_step": lambda p, d: SmoothStep(p["dx"], p.get("cells", 1), p.get("envelope", 4.0), d),
}

_KIND_KEYS = {
    "gaussian": {"center", "width", "amplitude"},
    "polynomial_bump": {"radius", "power", "center"},
    "cosine": {"frequency", "amplitude"},
    "abs_kink": {"center", "envelope"},
    "weierstrass": {"a", "b", "terms"},
    "weierstrass_bump": {"a", "b", "terms", "width"},
    "constant": {"value"},
    "smooth_step": {"dx", "cells", "envelope"},
}


def build_function(spec: dict, d: int) -> TestFunction:
    """Construct a corpus function from ``{"kind": ..., params...}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown function kind {kind!r}")
    unknown = set(spec) - _KIND_KEYS[kind]
    if unknown:
        raise ValueError(f"unknown keys for {kind}: {sorted(unknown)}")
    return _KINDS[kind](spec, d)
