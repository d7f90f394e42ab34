"""Smoke tests for the python bindings: every exported entry point does one
round trip on a small model, with values cross-checked against closed forms.
Fixture configs are read from the directory named by REPRODIFF_FIXTURES."""

import json
import math
import os
from pathlib import Path

import pytest

import reprodiff

FIXTURES = Path(os.environ["REPRODIFF_FIXTURES"])


def split_config(n_x=8, n_t=100, clearance="1", gain="2", kappa=0.3, bc="neumann"):
    return json.dumps(
        {
            "domain": {"x_lo": 0.0, "x_hi": 1.0, "n_x": n_x},
            "time": {"period": 1.0, "n_t": n_t},
            "diffusion": {"kappa": [kappa], "a": ["1"]},
            "boundary": {"kind": bc},
            "reaction": {"form": "split", "V": [[clearance]], "F": [[gain]]},
        }
    )


def test_exports_are_complete():
    for name in reprodiff.__all__:
        assert hasattr(reprodiff, name)


def test_validate_clean_and_broken():
    rep = reprodiff.validate(split_config())
    assert rep["all_ok"] and rep["violations"] == []

    bad = json.loads(split_config())
    bad["diffusion"]["kappa"] = [-1.0]
    with pytest.raises(reprodiff.ConfigError):
        reprodiff.validate(json.dumps(bad))


def test_r0_constant_ratio():
    # x-independent gain 2 over clearance 1: the ratio is exactly 2.
    out = reprodiff.r0(split_config())
    assert out["status"] == "positive"
    assert out["value"] == pytest.approx(2.0, rel=1e-3)
    assert out["mu_lo"] <= out["value"] <= out["mu_hi"]
    assert out["probes"] > 0


def test_r0_rejects_combined_form():
    cfg = json.loads(split_config())
    cfg["reaction"] = {"form": "combined", "entries": [["1"]]}
    with pytest.raises(reprodiff.ConfigError):
        reprodiff.r0(json.dumps(cfg))


def test_lambda_star_constant_decay():
    cfg = json.loads(split_config())
    cfg["reaction"] = {"form": "combined", "entries": [["-0.5"]]}
    lam = reprodiff.lambda_star(json.dumps(cfg))
    assert lam == pytest.approx(0.5, abs=5e-3)


def test_spectral_radius_triangular_and_guards():
    assert reprodiff.spectral_radius([[2.0, 0.0], [1.0, 3.0]]) == pytest.approx(3.0, abs=1e-8)
    with pytest.raises(reprodiff.ComputeError):
        reprodiff.spectral_radius([[-1.0]])


def parse_csv(text):
    lines = [l for l in text.strip().splitlines()]
    header = lines[0].split(",")
    rows = [dict(zip(header, l.split(","))) for l in lines[1:]]
    return header, rows


def test_sweep_csv_schema_and_determinism():
    cfg = (FIXTURES / "scalar_neumann.json").read_text()
    csv1 = reprodiff.sweep_csv(cfg, [1e-3, 1.0, 100.0], "r0", 1)
    csv2 = reprodiff.sweep_csv(cfg, [1e-3, 1.0, 100.0], "r0", 2)

    header, rows = parse_csv(csv1)
    assert header == ["kappa_1", "value", "status", "omega_at_value", "wall_ms"]
    assert "nan" not in csv1.lower()
    statuses = [r["status"] for r in rows]
    assert statuses.count("limit_small") == 1 and statuses.count("limit_large") == 1
    assert len(rows) == 3 + 2

    # Deterministic under a different worker count, wall clock aside.
    _, rows2 = parse_csv(csv2)
    for a, b in zip(rows, rows2):
        for key in ("kappa_1", "value", "status", "omega_at_value"):
            assert a[key] == b[key]


def test_sweep_csv_eigenvalue_mode():
    cfg = (FIXTURES / "eig_two_component.json").read_text()
    csv = reprodiff.sweep_csv(cfg, [0.1, 10.0], "eigenvalue", 1)
    header, rows = parse_csv(csv)
    assert header[:2] == ["kappa_1", "kappa_2"]
    assert len(rows) == 2 + 2


def test_zika_constant_case():
    out = reprodiff.zika((FIXTURES / "zika_constant.json").read_text())
    assert out["status"] == "positive"
    assert out["value"] == pytest.approx(math.sqrt(2.0), rel=1e-3)
    assert out["limit_small"] > 0 and out["limit_large"] > 0


def test_periodic_logistic():
    cfg = json.dumps(
        {
            "domain": {"x_lo": 0.0, "x_hi": 1.0, "n_x": 16},
            "time": {"period": 1.0, "n_t": 50},
            "diffusion": {"kappa": [0.5], "a": ["1"]},
            "boundary": {"kind": "neumann"},
            "reaction": {
                "form": "nonlinear",
                "G": ["(1 + x)*q1 - q1*q1"],
                "v_lower": ["0.2"],
                "v_upper": [4.0],
                "h": 0.5,
            },
        }
    )
    out = reprodiff.periodic(cfg)
    assert out["residual"] <= 1e-8
    assert out["two_sided_agreement"]
    assert out["periods_to_converge"] >= 1
    assert out["w_hat_norm"] >= 0.0
