"""Command-line experiment runner.

Each subcommand reads one JSON configuration, runs the corresponding
verification routines for every configured model and writes one JSON report
file per model (plus CSV curves) under ``--out``.  Every report file embeds
the fully resolved configuration.  The process exits with 0 when all
reports pass, 1 when any report fails and 2 on configuration errors.

Configuration schema (all sections optional, defaults shown by
``levyschauder defaults``)::

    {
      "models": [{"family": "cauchy", "d": 2}, ...],
      "models_check": {...},
      "density": {...},
      "gradient_fit": {...},
      "holder": {...},
      "resolvent": {...},
      "schauder": {...},
      "carre": {...},
      "counterexamples": {...}
    }

Model entries take one of two forms.  Built-in families, with ``d`` in
{1, 2} (default 1)::

    {"family": "cauchy", "d": 2}
    {"family": "isotropic_stable", "alpha": 1.5, "d": 1}
    {"family": "brownian", "d": 1, "drift": [0.5], "diffusion": [[2.0]]}
    {"family": "sum_stable", "alpha": 1.5, "beta": 0.5}
    {"family": "relativistic_stable", "alpha": 1.0, "mass": 1.0}
    {"family": "subordinated_brownian", "bernstein": "power" | "relativistic" | "log",
     "alpha": ..., "mass": ..., "index": ...}
    {"family": "anisotropic_stable", "d": 2, "alpha": 1.2,
     "directions": [[1, 0], [0, 1]], "weights": [1, 1]}

Custom triplets, where ``measure.form`` is ``zero``, ``polar`` (keys
``directions``, ``weights``, ``inner_index``, optional ``outer_index`` and
``radius``) or ``density`` (keys ``index``, optional ``coefficient``)::

    {"triplet": {"b": [0.0], "Q": [[1.0]], "measure": {"form": "zero"}},
     "declared_index": 2.0}

Test functions (``f``, ``g``, ``h``, ``u`` and resolvent ``functions``)
are ``{"kind": ..., params...}`` with kinds ``constant``, ``gaussian``,
``polynomial_bump``, ``cosine``, ``abs_kink``, ``weierstrass``,
``weierstrass_bump`` and ``smooth_step``.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import cauchy_lab
from .corpus import build_function
from .errors import ConfigError, LevySchauderError
from .generator_ops import (carre_limit_check, generator_limit_check, product_rule_residual,
                            resolvent_identity_residual, schauder_experiment)
from .holder import holder_exponent_estimate, zygmund_norm
from .levy_models import (check_hartman_wintner, check_sector, check_spectral_nondegeneracy,
                          fit_symbol_growth, model_from_dict, small_jump_moment)
from .reports import VerificationReport, write_csv, write_json
from .resolvent_engine import (check_potential_limit, lattice_scales, verify_resolvent_smoothing)
from .spectral_grid import (GridField, GridSpec, check_chapman_kolmogorov,
                            check_fourier_lower_bound, check_second_derivative_bound, density,
                            fit_gradient_exponent, gradient_l1_curve, select_grid)

__all__ = ["DEFAULTS", "resolve_config", "run", "main"]

COMMANDS = ("models-check", "density", "gradient-fit", "holder", "resolvent", "schauder",
            "carre", "counterexamples")
NEEDS_MODELS = {"models-check", "density", "gradient-fit", "resolvent", "schauder", "carre"}

# Leaves set to None are optional; nested dicts are validated key by key.
DEFAULTS: dict[str, Any] = {
    "models": [],
    "models_check": {"moment_offset": 0.2, "growth_rtol": 0.03},
    "density": {"t": [0.1, 1.0], "grid": None, "mass_tol": 1e-6, "ck_tol": 1e-6,
                "slack": 1e-3, "fourier_tol": 1e-6},
    "gradient_fit": {"t_min": 1e-2, "t_max": 1.0, "per_decade": 12, "n": None, "rtol": 0.03},
    "holder": {
        "dimension": 1,
        "k_min": 4,
        "k_max": 16,
        "samples": 2001,
        "sample_range": [-1.0, 1.0],
        "functions": [
            {"function": {"kind": "weierstrass"}, "expected": 0.6309297535714574, "atol": 0.05},
            {"function": {"kind": "abs_kink"}, "expected": 1.0, "atol": 0.05},
        ],
    },
    "resolvent": {
        "lambda": 3.0,
        "grid": {"n": 1024, "half_width": 8.0},
        "grid_2d": {"n": 256, "half_width": 8.0},
        "functions": [
            {"function": {"kind": "gaussian", "width": 0.5}, "beta": 0.5},
            {"function": {"kind": "weierstrass_bump", "terms": 5}, "beta": 0.5},
        ],
        "drift_tol": 0.1,
        "identity_tol": 1e-2,
        "potential": {
            "enabled": True,
            "grid": {"n": 8192, "half_width": 128.0},
            "grid_2d": {"n": 1024, "half_width": 32.0},
            "u": {"kind": "polynomial_bump", "radius": 0.5},
            "rtol": 0.02,
        },
    },
    "schauder": {
        "lambda": None,
        "rho": 0.0,
        "delta": 0.5,
        "alpha": None,
        "grid": {"n": 1024, "half_width": 8.0},
        "grid_2d": {"n": 256, "half_width": 8.0},
        "h": {"kind": "gaussian", "width": 0.5},
        "drift_tol": 0.1,
    },
    "carre": {
        "grid": {"n": 8192, "half_width": 64.0},
        "grid_2d": {"n": 256, "half_width": 8.0},
        "f": {"kind": "gaussian", "width": 0.7},
        "g": {"kind": "gaussian", "width": 0.5, "center": 0.3},
        "x": 0.2,
        "t": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        "generator_t": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        "product_tol": 1e-2,
        "limit_rtol": 1e-2,
    },
    "counterexamples": {
        "t": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        "s": [0.1, 0.05, 0.01],
        "lipschitz_k_min": 3,
        "lipschitz_k_max": 12,
        "potential_rtol": 1e-2,
        "slope_rtol": 0.15,
    },
}

_FREE_FORM = {"grid", "grid_2d", "functions", "h", "f", "g", "u", "models", "x"}


def _merge(defaults: dict, user: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(defaults[key], dict) and key not in _FREE_FORM:
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _check_grid(grid, where: str) -> None:
    if grid is None:
        return
    if not isinstance(grid, dict) or set(grid) - {"n", "half_width"}:
        raise ConfigError(f"{where} must be an object with keys n, half_width")


def resolve_config(user: dict) -> dict:
    """Merge ``user`` into :data:`DEFAULTS`, validating every key and spec.

    Raises
    ------
    ConfigError
        On unknown keys, malformed sections, or invalid model/function specs.
    """
    if not isinstance(user, dict):
        raise ConfigError("configuration must be a JSON object")
    cfg = _merge(DEFAULTS, user, "")
    if not isinstance(cfg["models"], list):
        raise ConfigError("'models' must be a list")
    try:
        for m in cfg["models"]:
            model_from_dict(m)
        for section in ("resolvent", "schauder", "carre"):
            for key in ("grid", "grid_2d"):
                _check_grid(cfg[section][key], f"{section}.{key}")
        _check_grid(cfg["density"]["grid"], "density.grid")
        for key in ("grid", "grid_2d"):
            _check_grid(cfg["resolvent"]["potential"][key], f"resolvent.potential.{key}")
        build_function(cfg["resolvent"]["potential"]["u"], 1)
        for item in cfg["holder"]["functions"] + cfg["resolvent"]["functions"]:
            if set(item) - {"function", "expected", "atol", "beta"}:
                raise ConfigError(f"unknown keys in function entry {sorted(item)}")
            build_function(item["function"], cfg["holder"]["dimension"])
        for key in ("f", "g"):
            build_function(cfg["carre"][key], 1)
        build_function(cfg["schauder"]["h"], 1)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _slug(i: int, model) -> str:
    return f"{i:02d}_{model.name}_d{model.dimension}"


def _grid(section: dict, d: int, refine: int) -> GridSpec:
    g = section["grid"] if d == 1 else section["grid_2d"]
    return GridSpec(d, int(g["n"]) * 2**refine, float(g["half_width"]))


def _scaled(tol: float, scale: float) -> float:
    return float(tol) * scale


def _model_alpha(model, override=None) -> float:
    if override is not None:
        return float(override)
    if model.declared_index is None:
        raise ConfigError(f"model {model.name} has no declared index; set alpha explicitly")
    return float(model.declared_index)


class _Writer:
    def __init__(self, out: Path, config: dict, command: str, options: dict):
        self.root = out / command
        self.root.mkdir(parents=True, exist_ok=True)
        self.meta = {"command": command, "config": config, "options": options}
        self.failed = False

    def reports(self, stem: str, reports: list[VerificationReport], extra: dict | None = None):
        body = dict(self.meta)
        body["reports"] = [r.to_dict() for r in reports]
        body["pass"] = all(bool(r.passed) for r in reports)
        if extra:
            body.update(extra)
        self.failed |= not body["pass"]
        write_json(self.root / f"{stem}.json", body)
        for r in reports:
            for name, table in r.tables.items():
                if table:
                    write_csv(self.root / f"{stem}_{name}.csv", table[0], table[1:])
        return body["pass"]

    def csv(self, name: str, header, rows):
        write_csv(self.root / name, header, rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _models_check(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["models_check"]
    for i, model in enumerate(models):
        reps = [check_hartman_wintner(model), check_sector(model)]
        fit = fit_symbol_growth(model)
        if model.declared_index is not None:
            rel = abs(fit.alpha_hat - model.declared_index) / model.declared_index
            reps.append(VerificationReport("symbol_growth", {"declared_index": model.declared_index},
                                           fit.to_dict(), _scaled(opt["growth_rtol"], scale),
                                           rel <= _scaled(opt["growth_rtol"], scale)))
        trip = model.triplet
        if trip is not None and trip.measure.form != "zero":
            if trip.measure.form == "polar":
                reps.append(check_spectral_nondegeneracy(trip.measure))
            if model.declared_index is not None and model.declared_index < 2:
                a = model.declared_index
                hi = small_jump_moment(trip.measure, a + opt["moment_offset"])
                lo = small_jump_moment(trip.measure, a - opt["moment_offset"])
                expected = -opt["moment_offset"]
                ok = hi.converged and not lo.converged and \
                    abs(lo.log_slope - expected) <= 0.1 * abs(expected) * scale
                reps.append(VerificationReport(
                    "small_jump_moment", {"alpha": a, "offset": opt["moment_offset"]},
                    {"converged_above": hi.converged, "converged_below": lo.converged,
                     "log_slope_below": lo.log_slope, "expected_slope": expected,
                     "value_above": hi.values[-1]}, 0.1 * scale, ok,
                    tables={"moments": [("eps", "above", "below")]
                            + [(e, a_, b_) for e, a_, b_ in zip(hi.eps, hi.values, lo.values)]}))
        w.reports(_slug(i, model), reps, {"model": model.to_dict()})


def _density(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["density"]
    for i, model in enumerate(models):
        reps = []
        for t in opt["t"]:
            t = float(t)
            if opt["grid"] is None:
                spec, _ = select_grid(model, t, order=2)
                spec = spec.refined(2**refine) if refine else spec
            else:
                spec = _grid(opt, model.dimension, refine)
            res = density(model, t, spec)
            diag = res.diagnostics
            ok = diag["mass_error"] <= _scaled(opt["mass_tol"], scale) and diag["min_value"] >= -1e-8
            reps.append(VerificationReport(f"density_t={t:g}", {"t": t, "grid": spec.to_dict()},
                                           diag, _scaled(opt["mass_tol"], scale), ok))
            reps.append(check_chapman_kolmogorov(model, t, spec, _scaled(opt["ck_tol"], scale)))
            reps.append(check_second_derivative_bound(model, t, spec, _scaled(opt["slack"], scale)))
            reps.append(check_fourier_lower_bound(model, t, spec, _scaled(opt["fourier_tol"], scale)))
            ax = spec.axis()
            vals = res.field.values if model.dimension == 1 else res.field.values[:, spec.n // 2]
            w.csv(f"{_slug(i, model)}_density_t={t:g}.csv", ("x", "p"), zip(ax, vals))
        w.reports(_slug(i, model), reps, {"model": model.to_dict()})


def _gradient_fit(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["gradient_fit"]
    n_t = max(4, int(round(opt["per_decade"] * np.log10(opt["t_max"] / opt["t_min"]))) + 1)
    t_list = np.geomspace(opt["t_min"], opt["t_max"], n_t)
    for i, model in enumerate(models):
        n = opt["n"] * 2**refine if opt["n"] else None
        curve = gradient_l1_curve(model, t_list, n=n)
        fit = fit_gradient_exponent(curve)
        rows = [(t, v, np.log(v) - (fit.intercept + fit.slope * np.log(t))) for t, v in curve]
        tol = _scaled(opt["rtol"], scale)
        if model.declared_index is not None:
            rel = abs(fit.alpha_hat - model.declared_index) / model.declared_index
            ok = rel <= tol
        else:
            rel, ok = None, True
        rep = VerificationReport("gradient_fit", {"t": t_list.tolist(), "n": n},
                                 {**fit.to_dict(), "declared_index": model.declared_index,
                                  "relative_error": rel}, tol, ok,
                                 tables={"curve": [("t", "value", "fit_residual")] + rows})
        w.reports(_slug(i, model), [rep], {"model": model.to_dict()})


def _holder(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["holder"]
    d = int(opt["dimension"])
    hs = 2.0 ** -np.arange(opt["k_min"], opt["k_max"] + 1)
    lo, hi = opt["sample_range"]
    n_s = int(opt["samples"]) * 2**refine
    x = np.linspace(lo, hi, n_s)
    if d == 2:
        m = max(2, int(np.sqrt(n_s)))
        g = np.linspace(lo, hi, m)
        x = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    for i, item in enumerate(opt["functions"]):
        f = build_function(item["function"], d)
        est = holder_exponent_estimate(f, hs, x)
        exp_ = item.get("expected")
        atol = _scaled(item.get("atol", 0.05), scale)
        ok = True if exp_ is None else abs(est.alpha_hat - exp_) <= atol
        order = max(est.alpha_hat - 1e-9, 0.0) if exp_ is None else exp_
        norm = zygmund_norm(f, min(order, 1.99), hs, x)
        rep = VerificationReport(
            "holder_exponent", {"function": item["function"], "scales": hs.tolist()},
            {"alpha_hat": est.alpha_hat, "saturated": est.saturated, "expected": exp_,
             "norm": norm.to_dict()}, atol, ok,
            tables={"scales": list(norm.csv_rows())})
        w.reports(f"{i:02d}_{item['function']['kind']}", [rep])


def _resolvent(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["resolvent"]
    lam = float(opt["lambda"])
    for i, model in enumerate(models):
        spec = _grid(opt, model.dimension, refine)
        alpha = _model_alpha(model)
        reps = []
        for item in opt["functions"]:
            f = build_function(item["function"], model.dimension)
            beta = float(item.get("beta", 0.0))
            rep = verify_resolvent_smoothing(model, lam, f, alpha, beta, spec,
                                             drift_tol=_scaled(opt["drift_tol"], scale))
            rep.inputs["function"] = item["function"]
            reps.append(rep)
            field = GridField.from_function(spec, f)
            resid = resolvent_identity_residual(model, lam, field)
            tol = _scaled(opt["identity_tol"], scale)
            reps.append(VerificationReport("resolvent_identity",
                                           {"lambda": lam, "function": item["function"]},
                                           {"residual": resid}, tol, resid <= tol))
        pot = opt["potential"]
        if pot["enabled"] and alpha < model.dimension:
            pspec = _grid(pot, model.dimension, refine)
            u = GridField.from_function(pspec, build_function(pot["u"], model.dimension))
            reps.append(check_potential_limit(model, alpha, u,
                                              rtol=_scaled(pot["rtol"], scale)))
        w.reports(_slug(i, model), reps, {"model": model.to_dict()})


def _schauder(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["schauder"]
    for i, model in enumerate(models):
        spec = _grid(opt, model.dimension, refine)
        alpha = _model_alpha(model, opt["alpha"])
        h = build_function(opt["h"], model.dimension)
        rep = schauder_experiment(model, opt["lambda"], float(opt["rho"]), h, alpha,
                                  float(opt["delta"]), spec, scales=lattice_scales(spec))
        tol = _scaled(opt["drift_tol"], scale)
        ok = np.isfinite(rep.ratio) and rep.refinement_drift is not None \
            and rep.refinement_drift <= tol
        vr = VerificationReport("schauder_experiment", {"grid": spec.to_dict(), "h": opt["h"]},
                                rep.to_dict(), tol, bool(ok),
                                tables={"norm_f": list(rep.norm_f.csv_rows()),
                                        "norm_g": list(rep.norm_g.csv_rows())})
        w.reports(_slug(i, model), [vr], {"model": model.to_dict()})


def _carre(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["carre"]
    for i, model in enumerate(models):
        d = model.dimension
        spec = _grid(opt, d, refine)
        f, g = build_function(opt["f"], d), build_function(opt["g"], d)
        x = np.full(d, float(opt["x"])) if np.ndim(opt["x"]) == 0 else np.asarray(opt["x"], float)
        ax = spec.axis()
        x = ax[np.argmin(np.abs(ax[:, None] - x[None, :]), axis=0)]
        reps = [generator_limit_check(model, GridField.from_function(spec, f), opt["generator_t"],
                                      rtol=_scaled(1e-3, scale))]
        trip = model.triplet
        # the carre du champ here is the jump part; it is the Leibniz defect
        # only for pure-jump models
        if trip is not None and trip.measure.form != "zero" and not np.any(trip.diffusion):
            reps.insert(0, product_rule_residual(model, f, g, spec,
                                                 tol=_scaled(opt["product_tol"], scale)))
            reps.append(carre_limit_check(model, f, g, x, opt["t"], spec,
                                          rtol=_scaled(opt["limit_rtol"], scale)))
        w.reports(_slug(i, model), reps, {"model": model.to_dict()})


def _counterexamples(cfg, models, w: _Writer, scale: float, refine: int):
    opt = cfg["counterexamples"]
    dq = cauchy_lab.check_difference_quotient(opt["t"])
    w.reports("c1_function_outside_domain", [dq])
    s_list = [2.0**-k for k in range(opt["lipschitz_k_min"], opt["lipschitz_k_max"] + 1)]
    pot = cauchy_lab.check_potential_agreement(opt["s"], _scaled(opt["potential_rtol"], scale))
    lip = cauchy_lab.lipschitz_divergence(s_list, _scaled(opt["slope_rtol"], scale))
    w.reports("domain_function_not_lipschitz", [pot, lip])


_DISPATCH = {
    "models-check": _models_check,
    "density": _density,
    "gradient-fit": _gradient_fit,
    "holder": _holder,
    "resolvent": _resolvent,
    "schauder": _schauder,
    "carre": _carre,
    "counterexamples": _counterexamples,
}


def run(command: str, config: dict, out, tolerance_scale: float = 1.0,
        grid_refine: int = 0) -> int:
    """Run ``command`` (or ``"all"``) and return the process exit code."""
    try:
        cfg = resolve_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    commands = COMMANDS if command == "all" else (command,)
    if command not in _DISPATCH and command != "all":
        print(f"unknown command {command!r}", file=sys.stderr)
        return 2
    if not cfg["models"] and any(c in NEEDS_MODELS for c in commands):
        print("no models configured", file=sys.stderr)
        return 2
    if tolerance_scale <= 0 or grid_refine < 0:
        print("tolerance scale must be positive and grid refinement non-negative",
              file=sys.stderr)
        return 2
    models = [model_from_dict(m) for m in cfg["models"]]
    options = {"tolerance_scale": tolerance_scale, "grid_refine": grid_refine}
    failed = False
    for c in commands:
        w = _Writer(Path(out), cfg, c, options)
        try:
            _DISPATCH[c](cfg, models, w, tolerance_scale, grid_refine)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        except LevySchauderError as exc:
            write_json(w.root / "error.json", {**w.meta, "pass": False,
                                               "error": type(exc).__name__, "message": str(exc)})
            w.failed = True
        failed |= w.failed
        print(f"[{'FAIL' if w.failed else 'PASS'}] {c}")
    return 1 if failed else 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levyschauder",
                                description="Numerical verification experiments for Lévy "
                                            "generators and Schauder estimates.")
    p.add_argument("command", choices=COMMANDS + ("all", "defaults"))
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, default=Path("levyschauder-out"),
                   help="output directory")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every pass tolerance by this factor")
    p.add_argument("--grid-refine", type=int, default=0,
                   help="double lattice sizes this many times")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "defaults":
        print(json.dumps(DEFAULTS, indent=2, sort_keys=True))
        return 0
    config: dict = {}
    if args.config is not None:
        try:
            config = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    return run(args.command, config, args.out, args.tolerance_scale, args.grid_refine)


if __name__ == "__main__":
    sys.exit(main())
