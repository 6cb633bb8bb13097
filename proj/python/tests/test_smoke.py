import json
import math
from pathlib import Path

import numpy as np
import pytest

import survkit

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "data"


def cohort(n=300, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    death = np.round(1 + 500 * rng.exponential(size=n) * np.exp(-2 * x[:, 0]))
    censor = np.round(1 + rng.uniform(0, 3000, size=n))
    return x, np.minimum(death, censor), death <= censor


def test_kaplan_meier_without_censoring_is_empirical():
    t = np.array([1.0, 2.0, 2.0, 4.0])
    km = survkit.kaplan_meier(t, np.ones(4, dtype=bool))
    assert list(km["times"]) == [1.0, 2.0, 4.0]
    assert list(km["survival"]) == [0.75, 0.25, 0.0]


def test_concordance_matches_pair_count():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.array([True, True, False, True])
    r = np.array([4.0, 3.0, 1.0, 2.0])
    out = survkit.concordance_index(t, e, r)
    assert out["usable_pairs"] == 5
    assert out["c_index"] == pytest.approx(1.0)


def test_roc_separable():
    t = np.array([1.0, 2.0, 10.0, 11.0])
    roc = survkit.roc_at_horizon(t, np.ones(4, dtype=bool), np.array([0.9, 0.8, 0.2, 0.1]), 5.0)
    assert roc["auc"] == 1.0
    assert roc["n_positive"] == 2 and roc["n_negative"] == 2


def test_cox_recovers_direction():
    x, t, e = cohort()
    model = survkit.fit_cox(x, t, e, ["a", "b", "c"])
    rows = model.summary()
    assert [r.feature for r in rows] == ["a", "b", "c"]
    assert rows[0].coef > 1.0
    assert abs(rows[1].z) < 4 and abs(rows[2].z) < 4
    assert math.isclose(rows[0].hazard_ratio, math.exp(rows[0].coef))


def test_rsf_deterministic_and_round_trips():
    x, t, e = cohort(200, 1)
    a = survkit.fit_rsf(x, t, e, n_trees=30, seed=7, n_threads=1)
    b = survkit.fit_rsf(x, t, e, n_trees=30, seed=7, n_threads=4)
    assert a.to_json() == b.to_json()
    restored = survkit.SurvivalForest.from_json(a.to_json())
    assert restored.risk_score(x[0]) == a.risk_score(x[0])
    assert np.all(np.diff(a.predict_chf(x[0])) >= 0)
    assert a.oob_c_index(x, t, e) > 0.7


def test_errors_map_to_python_exceptions():
    with pytest.raises(survkit.DataError):
        survkit.fit_cox(np.ones((5, 1)), np.arange(1.0, 6.0), np.ones(5, dtype=bool))
    with pytest.raises(survkit.SurvkitError):
        survkit.concordance_index(np.ones(3), np.ones(3, dtype=bool), np.arange(3.0))


def test_report_on_fixture(tmp_path):
    summary = survkit.run_report(str(FIXTURES / "fixture_config.json"), str(tmp_path))
    assert "c_index" in summary.lower() or "c-index" in summary.lower()
    evaluation = json.loads((tmp_path / "evaluation.json").read_text())
    assert evaluation["horizon"] == 1000
    assert set(evaluation["models"]) == {"cox", "rsf"}
