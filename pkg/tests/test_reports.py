import json
import math

import numpy as np
import pytest

from levyschauder.errors import DegenerateFit
from levyschauder.reports import (VerificationReport, dumps, fit_loglog, format_csv,
                                  write_csv, write_json)


def test_fit_loglog_recovers_power_law():
    pts = [(t, 3.0 * t**-0.75) for t in np.geomspace(1e-2, 1, 9)]
    fit = fit_loglog(pts)
    assert fit.slope == pytest.approx(-0.75, rel=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.residual < 1e-12


def test_fit_loglog_degenerate():
    with pytest.raises(DegenerateFit):
        fit_loglog([(1, 1), (2, 2), (3, 3)])
    with pytest.raises(DegenerateFit):
        fit_loglog([(1, 1), (2, math.nan), (3, 3), (4, 4)])


def test_report_serialisation_round_trip():
    rep = VerificationReport("demo", {"x": np.array([1.0, 2.0])},
                             {"value": np.float64(0.1), "flag": np.bool_(True), "z": 1 + 2j},
                             1e-3, True, tables={"t": [("a", "b"), (1.0, 2)]})
    data = json.loads(rep.to_json())
    assert data["inputs"]["x"] == [1.0, 2.0]
    assert data["computed"]["value"] == 0.1
    assert data["computed"]["flag"] is True
    assert data["computed"]["z"] == {"re": 1.0, "im": 2.0}
    assert data["pass"] is True
    assert bool(rep) and rep.summary() == "[PASS] demo"


def test_dumps_is_sorted_and_exact():
    text = dumps({"b": 0.1, "a": [1, 2.0], "c": None})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text)["b"] == 0.1
    assert "2.0" in text


def test_non_finite_values_encoded():
    text = dumps({"x": math.inf, "y": -math.inf, "z": math.nan})
    assert "Infinity" in text and "-Infinity" in text and "NaN" in text


def test_unserialisable_object():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_csv_format(tmp_path):
    text = format_csv(("t", "v"), [(0.1, 1), (1.0 / 3.0, "x")])
    assert text.splitlines() == ["t,v", "0.1,1", "0.3333333333,x"]
    write_csv(tmp_path / "a.csv", ("t",), [(1.0,)])
    write_json(tmp_path / "a.json", {"k": 1})
    assert (tmp_path / "a.csv").read_text() == "t\n1.0\n"
    assert json.loads((tmp_path / "a.json").read_text()) == {"k": 1}
