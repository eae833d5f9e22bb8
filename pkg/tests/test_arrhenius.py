import math

import pytest

from wittenlab.arrhenius import classify, predict_window_spectrum, rough_bounds
from wittenlab.errors import CriticalWindowError, InputError
from wittenlab.field import GridTopology, LevelWindow, SampledField
from wittenlab.persistence import compute_barcode

FOUR = SampledField(GridTopology.circle(4), [0.0, 2.0, -1.0, 3.0])


def test_full_window_classification():
    c = classify(compute_barcode(FOUR), LevelWindow.full())
    assert [c.counts(p) for p in (0, 1)] == [{"X": 1, "Y": 0, "Z": 1, "J": 2},
                                             {"X": 0, "Y": 1, "Z": 1, "J": 2}]
    pred = predict_window_spectrum(c)
    assert pred.zero_multiplicity == (1, 1)
    assert [r.rate for r in pred.small_singular[0]] == [4.0]
    assert [(r.rate, r.block) for r in pred.rates[1]] == [(4.0, "d*")]
    assert pred.small_count(0) == 2


def test_window_holding_only_the_finite_bar():
    pred = predict_window_spectrum(classify(compute_barcode(FOUR), LevelWindow(-0.5, 2.5)))
    assert pred.zero_multiplicity == (0, 0)
    assert len(pred.small_singular[0]) == 1


def test_lonely_death_and_infinite_birth():
    c = classify(compute_barcode(FOUR), LevelWindow(1.0, 4.0))
    assert c.counts(1)["Z"] == 2 and c.counts(0)["J"] == 0


def test_critical_window_rejected():
    with pytest.raises(CriticalWindowError):
        classify(compute_barcode(FOUR), LevelWindow(0.0, 1.0))


def test_prediction_json_is_finite_text():
    pred = predict_window_spectrum(classify(compute_barcode(FOUR), LevelWindow.full()))
    txt = pred.to_json()
    assert '"window": [\n  "-inf",\n  "inf"\n ]' in txt


def test_rough_bounds():
    pred = predict_window_spectrum(classify(compute_barcode(FOUR), LevelWindow.full()))
    rb = rough_bounds(pred, 0.1)
    # levels -1, 0, 2, 3: eta = 1/4, span 4
    assert rb[0].log_R == pytest.approx(-2 * 0.25 / 0.1)
    assert rb[0].log_r == pytest.approx(-2 * 4.25 / 0.1)
    assert rb[0].contains_log(-4 / 0.1)
    with pytest.raises(InputError):
        rough_bounds(pred, 0.0)
