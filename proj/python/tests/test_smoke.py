import math

import numpy as np
import pytest

import rsmdp


def test_version():
    assert rsmdp.__version__ == "0.1.0"


def test_example_one_risk_seeking():
    mdp = rsmdp.example_model("ex1")
    sol = rsmdp.solve_average(mdp, 1.0)
    expected = math.log(0.3 * math.exp(-1) + 0.4 + 0.3 * math.e)
    assert sol["lambda"] == pytest.approx(expected, abs=1e-9)
    assert sol["optimal_rules"]["canonical"] == "3/3/3"


def test_mpe_matches_bellman():
    mdp = rsmdp.example_model("ex2")
    best = rsmdp.lambda_argmax(mdp, -1.0)
    sol = rsmdp.solve_average(mdp, -1.0)
    assert best["lambda"] == pytest.approx(sol["lambda"], abs=1e-8)


def test_entropic_utility_neutral_limit():
    assert rsmdp.entropic_utility([0.0, 2.0], [0.5, 0.5], 0.0) == pytest.approx(1.0)
    assert rsmdp.entropic_utility([3.0], [1.0], -2.0) == pytest.approx(3.0)


def test_discounted_example_four():
    mdp = rsmdp.example_model("ex4", 0.0)
    u = rsmdp.evaluate_discounted(mdp, [[0, 0, 0]], -1.0, 0.5)
    assert u[0] == pytest.approx(1.213, abs=5e-3)
    idx = rsmdp.switch_index(mdp, -1.0, 0.5)
    assert idx["root"] == pytest.approx(0.456, abs=1e-3)


def test_custom_model_and_validation():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    mdp = rsmdp.Mdp(["a", "b"], ["x"], [P], np.array([[1.0], [1.0]]))
    assert rsmdp.solve_average(mdp, 0.5)["lambda"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rsmdp.Mdp(["a", "b"], ["x"], [np.array([[0.5, 0.4], [0.5, 0.5]])], np.array([[1.0], [1.0]]))


def test_load_round_trip():
    mdp = rsmdp.example_model("ex3")
    again = rsmdp.load_mdp(mdp.to_json())
    assert again.states == mdp.states
    assert np.array_equal(again.rewards, mdp.rewards)
