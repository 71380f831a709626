import json
import math

import numpy as np
import pytest

import sphpursuit as sp


def test_grids():
    g = sp.reuter_grid(4)
    assert g.shape[1] == 2
    assert g[0, 1] == 1.0
    dh = sp.driscoll_healy_grid(3)
    assert dh.shape == (7 * 13, 2)


def test_records_round_trip():
    rec = "APK 0.5 4.71238898038469 0.7853981633974483 1"
    assert sp.canonical_record(rec) == rec
    assert sp.element_class("SL 0.5 0 0 0 1 2") == "SL"
    with pytest.raises(ValueError):
        sp.canonical_record("SH 2 3")


def test_constant_harmonic():
    pts = sp.reuter_grid(5)
    y = sp.synthesize([("SH 0 0", 1.0)], pts)
    assert np.allclose(y, 1.0 / math.sqrt(4.0 * math.pi), rtol=1e-14)
    table = sp.synthesize([], pts, 1.1, np.array([[0, 0, 1.0]]))
    assert np.allclose(table, y / 1.1, rtol=1e-14)


def test_upward_continuation_matches_evaluate():
    pts = sp.reuter_grid(3)
    rec = "APW 0.8 1 0.2 1"
    col = sp.evaluate(rec, pts, 1.2)
    direct = [sp.upward_eval(rec, 1.2, p[0], p[1]) for p in pts]
    assert np.allclose(col, direct, rtol=1e-12, atol=0)


def test_noise_and_metrics():
    y = np.linspace(1.0, 2.0, 1000)
    a = sp.add_noise(y, 0.05, 3)
    assert np.array_equal(a, sp.add_noise(y, 0.05, 3))
    assert np.array_equal(sp.add_noise(y, 0.0, 3), y)
    assert sp.rel_rmse(2 * y, y) == pytest.approx(1.0)
    assert sp.rel_data_error(np.zeros(1000), y) == 0.0


def test_small_learning_run():
    cfg = {
        "grid": {"kind": "reuter", "parameter": 12},
        "pursuit": {"variant": "lrofmp", "lambda": 1e-8, "max_iterations": 5},
        "learn": {
            "max_sh_degree": 4,
            "classes": ["SH", "APK"],
            "global": {"max_evaluations": 200},
            "start": [{"class": "APK", "radii": [0.9], "grid": {"kind": "reuter", "parameter": 2}}],
        },
        "data": {
            "model": {"terms": [{"element": "SH 2 1", "weight": 1.0}, {"element": "APK 0.6 1 0.3 1", "weight": 1.0}]},
            "noise": {"level": 0.01, "seed": 5},
        },
        "evaluation": {"grid": {"kind": "driscoll_healy", "parameter": 6}},
    }
    r = sp.run_experiment(cfg)
    assert 1 <= r["iterations"] <= 5
    assert len(r["dictionary"]) == r["iterations"]
    assert len(r["log"]) == r["iterations"]
    assert r["log"][-1]["rel_data_error"] == pytest.approx(r["rel_data_error"])
    assert r["approximation"].shape[0] == r["eval_grid"].shape[0]
    assert r["rel_rmse"] is not None
    again = sp.run_experiment(json.dumps(cfg))
    assert again["dictionary"] == r["dictionary"]


def test_contrived_config_is_canonical():
    text = sp.contrived_config(1)
    assert sp.canonical_config(text) == text
    assert json.loads(text)["pursuit"]["variant"] == "lrofmp"
