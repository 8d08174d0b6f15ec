import math
from pathlib import Path

import pytest

import acr

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def test_softmax_and_scores():
    p = acr.softmax([1.0, 0.0])
    assert p[0] == pytest.approx(0.7310585786300049, abs=1e-15)
    assert acr.score_msp([0.75, 0.25]) == 0.75
    assert acr.score_logits([3.0, 0.0, 0.0], 2) == pytest.approx(math.exp(3) / (math.exp(3) + 2))


def test_metrics_on_small_example():
    scores = [0.9, 0.8, 0.7, 0.6]
    correct = [True, True, False, True]
    assert acr.aurc(scores, correct) * 1000 == pytest.approx(1000 * 7 / 48)
    assert acr.auroc(scores, correct) == pytest.approx(2 / 3)
    coverage, risk = acr.risk_coverage(scores, correct)
    assert coverage[-1] == 1.0
    assert risk[-1] == pytest.approx(0.25)


def test_auroc_needs_both_classes():
    with pytest.raises(acr.DegenerateSplit):
        acr.auroc([0.1, 0.2], [True, True])


def test_mfs_two_swaps_a_block():
    e1 = [float(i) for i in range(8)]
    e2 = [float(100 + i) for i in range(8)]
    out = acr.mfs_two(e1, e2, y_true=1, num_classes=3, n_min=2, n_max=4, seed=7)
    n = out["n_swap"]
    assert 2 <= n <= 4
    assert out["lambda"] == n / 4
    assert sum(1 for a, b in zip(e1, out["embeddings"][0]) if a != b) == n
    assert len(out["label"]) == 4
    assert sum(out["label"]) == pytest.approx(1.0, abs=1e-12)


def test_fano_check_on_xor():
    table = [0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0]
    d = acr.dpi_and_fano_check(2, 2, 2, table)
    assert d["ok"]
    assert d["h_y_given_x12"] == pytest.approx(0.0, abs=1e-12)
    assert d["h_y_given_x1"] == pytest.approx(math.log(2))


def test_evaluate_fixture():
    m = acr.evaluate_dump(str(FIXTURES / "aurc4.csv"))
    assert m["aurc_x1000"] == pytest.approx(145.83, abs=0.01)


def test_tiny_experiment_runs():
    out = acr.run(epochs=2, n_train=48, n_val=24, n_test=24)
    assert len(out["history"]) == 2
    assert 0.0 <= out["metrics"]["acc"] <= 1.0


def test_bad_config_raises():
    with pytest.raises(acr.InvalidConfig):
        acr.run(method="magic")
