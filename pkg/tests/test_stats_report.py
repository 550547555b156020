import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpibench.report import (
    BenchmarkReport,
    ReportError,
    canonical_digest,
    canonical_json,
    read_report,
    validate_document,
    verify_report,
    write_csv,
    write_report,
)
from kpibench.stats import aggregate_sigma, binomial_sigma, expectation_from_eigenvalues, expectation_sigma, mean_sigma


@pytest.mark.parametrize("value,shots,expected", [
    (1.0, 100, 0.0),
    (0.0, 512, 1 / math.sqrt(512)),
    (0.5, 10_000, math.sqrt(0.75 / 10_000)),
    (-0.5, 10_000, math.sqrt(0.75 / 10_000)),
])
def test_expectation_sigma(value, shots, expected):
    assert expectation_sigma(value, shots) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("value,shots", [(1.5, 10), (0.0, 0)])
def test_expectation_sigma_domain(value, shots):
    with pytest.raises(ValueError):
        expectation_sigma(value, shots)


def test_aggregate_sigma_examples():
    assert aggregate_sigma([0.3] * 4) == pytest.approx(0.3)
    assert aggregate_sigma([0, 0, 0, 0.2]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        aggregate_sigma([0.1, 0.2, 0.3])


def test_mean_sigma_matches_monte_carlo():
    # sigma of the mean of four independent +-1 estimates with different expectations
    rng = np.random.default_rng(5)
    values = np.array([0.9, 0.6, 0.2, 0.0])
    shots = 512
    sig = [expectation_sigma(v, shots) for v in values]
    draws = rng.binomial(shots, (1 + values) / 2, size=(100_000, 4))
    means = (2 * draws / shots - 1).mean(axis=1)
    assert mean_sigma(sig) == pytest.approx(means.std(), rel=0.05)


def test_expectation_from_eigenvalues():
    est = expectation_from_eigenvalues(np.array([1, 1, -1, 1]))
    assert est.value == 0.5
    assert est.sigma == pytest.approx(math.sqrt(0.75 / 4))
    assert binomial_sigma(3, 12) == pytest.approx(math.sqrt(0.25 * 0.75 / 12))


# ------------------------------------------------------------------ reports

def _report(**extra):
    return BenchmarkReport(seed=3, config={"benchmark": "none", **extra}, timestamp="2026-01-01T00:00:00+00:00")


def test_write_read_write_is_byte_identical(tmp_path):
    r = _report(x=0.1, y=[1.0, 2.5e-300, -0.0])
    first = write_report(r, tmp_path / "a.json")
    again = write_report(read_report(tmp_path / "a.json"), tmp_path / "b.json")
    assert first == again


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip_is_exact(x):
    assert json.loads(canonical_json({"v": x}))["v"] == x


def test_canonical_json_sorts_keys():
    assert canonical_json({"b": 1, "a": {"d": True, "c": None}}) == (
        '{\n  "a": {\n    "c": null,\n    "d": true\n  },\n  "b": 1\n}\n')


def test_digest_ignores_timestamp():
    a, b = _report(), _report()
    b.timestamp = "2030-05-05T00:00:00+00:00"
    assert canonical_digest(a) == canonical_digest(b)
    b.seed = 4
    assert canonical_digest(a) != canonical_digest(b)


def test_missing_field_reports_pointer():
    doc = _report().to_dict()
    del doc["seed"]
    with pytest.raises(ReportError, match="seed"):
        validate_document(doc)
    doc = _report().to_dict()
    doc["sections"] = {"qec": {"inputs": {}}}
    with pytest.raises(ReportError) as exc:
        validate_document(doc)
    assert exc.value.pointer.startswith("/sections/qec")


def test_unknown_section_rejected():
    doc = _report().to_dict()
    doc["sections"] = {"qv": {}}
    with pytest.raises(ReportError):
        validate_document(doc)


def test_non_finite_floats_refused():
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


def test_csv_uses_exact_floats(tmp_path):
    write_csv(tmp_path / "t.csv", ["a", "b"], [{"a": 0.1, "b": 2}])
    assert (tmp_path / "t.csv").read_text() == "a,b\n0.10000000000000001,2\n"


def test_empty_report_verifies():
    assert verify_report(_report()) == []
