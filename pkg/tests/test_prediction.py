import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetpca.errors import NoRoot, NoTransition, PoleEvaluation
from hetpca.noise import ModelParams, balanced_split, homoscedastic, validate_and_normalize
from hetpca.prediction import (
    SecularFunctions,
    all_real_roots_B,
    critical_sample_ratio,
    evaluate_A,
    evaluate_B,
    evaluate_B_prime,
    homoscedastic_closed_form,
    largest_root_A,
    largest_root_B,
    predict,
)

from oracles import A_polynomial, B_polynomial, bisect, real_roots

EXAMPLE_MIX = validate_and_normalize([(0.2, 1.0), (0.8, 4.0)])
EXAMPLE_PARAMS = ModelParams(5.0, 2.0)
EXAMPLE = SecularFunctions(EXAMPLE_MIX, EXAMPLE_PARAMS)
# largest root of x^2 - 25x + 36 (B with denominators cleared)
BETA_EXACT = (25 + math.sqrt(481)) / 2
# largest real root of A, from the cleared degree-4 polynomial
ALPHA_ORACLE = real_roots(A_polynomial([0.2, 0.8], [1.0, 4.0], 5.0))[-1]


def test_evaluate_A_example():
    x = 23.4659
    expected = 1 - 1 / (x - 1) ** 2 - 64 / (x - 4) ** 2
    assert evaluate_A(EXAMPLE, x) == pytest.approx(expected, rel=1e-14)
    assert evaluate_A(EXAMPLE, x) == pytest.approx(0.8291, abs=1e-4)


def test_A_limit_and_noiseless():
    assert evaluate_A(EXAMPLE, 1e9) == pytest.approx(1.0, abs=1e-7)
    sf = SecularFunctions(homoscedastic(0.0), ModelParams(3.0, 1.0))
    for x in (0.1, 1.0, 50.0):
        assert evaluate_A(sf, x) == 1.0


def test_evaluate_B_and_derivative_example():
    assert evaluate_B(EXAMPLE, 23.466) == pytest.approx(0.0, abs=1e-3)
    x = 23.4659
    assert evaluate_B_prime(EXAMPLE, x) == pytest.approx(4 / (x - 1) ** 2 + 16 / (x - 4) ** 2, rel=1e-14)
    assert evaluate_B_prime(EXAMPLE, x) == pytest.approx(0.05015, abs=1e-5)


def test_B_prime_finite_difference():
    x, h = 30.0, 1e-6
    fd = (evaluate_B(EXAMPLE, x + h) - evaluate_B(EXAMPLE, x - h)) / (2 * h)
    assert fd == pytest.approx(evaluate_B_prime(EXAMPLE, x), rel=1e-6)


def test_pole_evaluation_raises():
    with pytest.raises(PoleEvaluation):
        evaluate_B(EXAMPLE, 4.0)
    with pytest.raises(PoleEvaluation):
        evaluate_A(EXAMPLE, 1.0)


def test_largest_root_B_example():
    beta = largest_root_B(EXAMPLE)
    assert beta == pytest.approx(23.466, abs=1e-3)
    assert beta == pytest.approx(BETA_EXACT, rel=1e-12)
    assert abs(evaluate_B(EXAMPLE, beta)) < 1e-12


@pytest.mark.parametrize(
    "mix, c, theta, expected",
    [
        (homoscedastic(1.0), 4.0, 1.0, 5.0),
        (homoscedastic(0.0), 5.0, 2.0, 20.0),
    ],
)
def test_largest_root_B_closed_forms(mix, c, theta, expected):
    assert largest_root_B(SecularFunctions(mix, ModelParams(c, theta))) == pytest.approx(expected, rel=1e-12)


def test_largest_root_A_example():
    alpha = largest_root_A(EXAMPLE)
    assert alpha == pytest.approx(ALPHA_ORACLE, rel=1e-12)
    f = lambda x: 1 - 1 / (x - 1) ** 2 - 64 / (x - 4) ** 2
    assert alpha == pytest.approx(bisect(f, 4.0 + 1e-9, 100.0), rel=1e-12)
    assert abs(evaluate_A(EXAMPLE, alpha)) < 1e-12


@pytest.mark.parametrize("s", [0.04, 1.0, 3.24])
@pytest.mark.parametrize("c", [1.5, 10.0, 40.0])
def test_largest_root_A_single_level(s, c):
    sf = SecularFunctions(homoscedastic(s), ModelParams(c, 1.0))
    assert largest_root_A(sf) == pytest.approx(s * (1 + math.sqrt(c)), rel=1e-12)


def test_largest_root_A_noiseless():
    with pytest.raises(NoRoot):
        largest_root_A(SecularFunctions(homoscedastic(0.0), ModelParams(2.0, 1.0)))


def test_all_roots_example():
    roots = all_real_roots_B(EXAMPLE)
    expected = real_roots(B_polynomial([0.2, 0.8], [1.0, 4.0], 5.0, 2.0))
    assert roots == pytest.approx(expected, rel=1e-10)
    assert roots == pytest.approx([1.5341, 23.4659], abs=1e-4)


def test_all_roots_single_level():
    sf = SecularFunctions(homoscedastic(1.0), ModelParams(4.0, 1.0))
    assert all_real_roots_B(sf) == pytest.approx([5.0], rel=1e-12)


def _random_mixture(rng, L, zero_ok=True):
    w = rng.uniform(0.05, 1.0, size=L)
    p = list(w / w.sum())
    p[-1] = 1.0 - math.fsum(p[:-1])
    v = rng.uniform(0.0, 10.0, size=L)
    if zero_ok and rng.random() < 0.2:
        v[0] = 0.0
    return validate_and_normalize(list(zip(p, v)))


@pytest.mark.parametrize("seed", range(20))
def test_all_roots_random_three_level_against_polynomial(seed):
    rng = np.random.default_rng(seed)
    mix = _random_mixture(rng, 3)
    params = ModelParams(rng.uniform(1.1, 50), rng.uniform(0.1, 5))
    sf = SecularFunctions(mix, params)
    roots = all_real_roots_B(sf)
    assert len(roots) == mix.num_levels
    assert roots == sorted(roots)
    expected = real_roots(B_polynomial(mix.proportions, mix.variances, params.sample_ratio, params.amplitude))
    assert roots == pytest.approx(expected, rel=1e-8, abs=1e-10)
    for r in roots:
        assert abs(evaluate_B(sf, r)) <= 1e-10 * sf._B_scale(r)
    assert largest_root_B(sf) == pytest.approx(max(roots), rel=1e-10)
    # interlacing
    for k, r in enumerate(roots[:-1]):
        assert mix.variances[k] < r < mix.variances[k + 1]
    assert roots[-1] > mix.variances[-1]


def test_predict_example():
    r = predict(EXAMPLE_MIX, EXAMPLE_PARAMS)
    assert r.value == pytest.approx(0.705, abs=5e-4)
    assert r.beta == pytest.approx(BETA_EXACT, rel=1e-12)
    assert r.alpha == pytest.approx(ALPHA_ORACLE, rel=1e-12)
    assert r.above_transition
    assert r.value == pytest.approx(r.a_at_beta / (r.beta * r.b_prime_at_beta))


@pytest.mark.parametrize("c, theta", [(1.01, 0.1), (5.0, 2.0), (50.0, 3.0)])
def test_predict_noiseless_is_one(c, theta):
    r = predict(homoscedastic(0.0), ModelParams(c, theta))
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert r.alpha is None


def test_predict_below_transition():
    r = predict(homoscedastic(2.0), ModelParams(3.0, 1.0))
    assert r.value == 0.0
    assert not r.above_transition
    assert r.raw_value < 0


@pytest.mark.parametrize(
    "c, theta, s, expected",
    [(4.0, 1.0, 1.0, 0.6), (7.0, 2.0, 0.0, 1.0), (3.0, 1.0, 2.0, 0.0)],
)
def test_homoscedastic_closed_form(c, theta, s, expected):
    assert homoscedastic_closed_form(c, theta, s) == pytest.approx(expected, abs=1e-15)


def test_critical_ratio_homoscedastic():
    assert critical_sample_ratio(homoscedastic(2.0), 1.0) == pytest.approx(4.0, rel=1e-9)
    for s, theta in [(3.0, 1.5), (0.5, 1.0), (5.0, 0.7)]:
        expected = max(1.0, s * s / theta ** 4)
        assert critical_sample_ratio(homoscedastic(s), theta) == pytest.approx(expected, rel=1e-9)


def test_critical_ratio_heteroscedastic_exceeds_homoscedastic():
    mix = balanced_split(2.0, (0.9, 0.1))
    c_star = critical_sample_ratio(mix, 1.0)
    assert c_star > 4.0
    assert predict(mix, ModelParams(c_star - 0.01, 1.0)).value == 0.0
    assert predict(mix, ModelParams(c_star + 0.01, 1.0)).value > 0.0


def test_critical_ratio_noiseless():
    with pytest.raises(NoTransition):
        critical_sample_ratio(homoscedastic(0.0), 1.0)


def test_value_monotone_in_largest_variance():
    params = ModelParams(10.0, 1.0)
    grid = np.linspace(0.0, 6.0, 61)
    for other in (0.0, 0.5, 2.0, 5.0):
        for p1 in (0.3, 0.7):
            values = [
                predict(validate_and_normalize([(p1, float(v)), (1 - p1, other)]), params).value
                for v in grid
                if v >= other
            ]
            assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_value_not_monotone_in_smaller_variance():
    # raising the smaller variance slightly from zero helps; values checked at 40 digits with mpmath
    params = ModelParams(10.0, 1.0)
    at0 = predict(validate_and_normalize([(0.3, 0.0), (0.7, 2.0)]), params).value
    at01 = predict(validate_and_normalize([(0.3, 0.1), (0.7, 2.0)]), params).value
    assert at0 == pytest.approx(0.5954451150103322, abs=1e-13)
    assert at01 == pytest.approx(0.5957319505384922, abs=1e-13)
    assert at01 > at0


mixtures = st.integers(min_value=0, max_value=2 ** 32 - 1).map(
    lambda seed: _random_mixture(np.random.default_rng(seed), int(np.random.default_rng(seed).integers(1, 5)))
)


@settings(max_examples=300, deadline=None)
@given(
    mixtures,
    st.floats(min_value=1.001, max_value=50.0),
    st.floats(min_value=0.01, max_value=5.0),
)
def test_prediction_invariants(mix, c, theta):
    params = ModelParams(c, theta)
    sf = SecularFunctions(mix, params)
    r = predict(mix, params)
    assert 0.0 <= r.value <= 1.0
    assert r.beta > mix.max_variance
    pole = mix.max_variance
    delta = 1e-9 * max(1.0, pole) * min(1.0, c * theta ** 2 * min(mix.proportions))
    assert evaluate_B(sf, pole + delta) < 0
    # exactly zero for a single level, up to rounding
    assert evaluate_B(sf, pole + c * theta ** 2) >= -1e-14 * (1 + pole / (c * theta ** 2))
    assert r.beta <= pole + c * theta ** 2
    if r.alpha is not None:
        assert r.alpha > mix.max_variance
        assert (evaluate_B(sf, r.alpha) < 0) == (r.a_at_beta > 0) == (r.value > 0)
    else:
        assert r.value > 0
