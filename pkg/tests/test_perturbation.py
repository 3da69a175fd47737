import math

import numpy as np
import pytest

from opframes.errors import BadParameter, CountMismatch, IndexOutOfRange, MeasureMismatch
from opframes.frames import FrameBounds, KOperator, OperatorFrame, frame_gram, k_frame_bounds, optimal_bounds
from opframes.harness import random_bessel_below, random_frame, random_k
from opframes.perturbation import (
    certify_bessel_sum,
    certify_combination,
    certify_extension,
    certify_k_corollary,
    certify_k_perturbation,
    certify_min_condition,
    certify_weighted,
    minimal_extension_norm,
    optimal_min_constant,
)

I2 = np.eye(2)


def fam(*ops, weights=None):
    weights = [1.0] * len(ops) if weights is None else weights
    return OperatorFrame.from_operators(weights, [np.atleast_2d(np.asarray(o, complex)) for o in ops])


def scalar_frame(c, side=2):
    return fam(c * np.eye(side))


def bounds(c):
    return (c.certified.lower, c.certified.upper), (c.observed.lower, c.observed.upper)


# -- Bessel sum --------------------------------------------------------------


def diagonal_pair():
    T = fam(np.diag([2.0, 0.0]), np.diag([0.0, 3.0]))
    R = fam(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    return T, R


def test_bessel_sum_diagonal_example():
    T, R = diagonal_pair()
    A, B, M = 4.0, 9.0, 1.0
    c = certify_bessel_sum(T, R, +1)
    assert c.hypothesis_ok
    cert, obs = bounds(c)
    assert cert == pytest.approx(((math.sqrt(A) - math.sqrt(M)) ** 2, (math.sqrt(B) + math.sqrt(M)) ** 2))
    # T + R has operators diag(3, 0), diag(0, 4)
    assert obs == pytest.approx((9.0, 16.0))
    assert c.upper_slack == pytest.approx(0.0, abs=1e-12)
    # T - R has operators diag(1, 0), diag(0, 2): the lower bound is attained
    c = certify_bessel_sum(T, R, -1)
    assert bounds(c)[1] == pytest.approx((1.0, 4.0))
    assert c.lower_slack == pytest.approx(0.0, abs=1e-12)
    assert c.theorem_id == "bessel_sum_minus"


def test_bessel_sum_zero_and_violation():
    T, _ = diagonal_pair()
    Z = fam(np.zeros((2, 2)), np.zeros((2, 2)))
    c = certify_bessel_sum(T, Z)
    cert, obs = bounds(c)
    assert cert == pytest.approx(obs)
    assert obs == pytest.approx((4.0, 9.0))
    c = certify_bessel_sum(T, T)
    assert not c.hypothesis_ok and c.hypothesis_margin < 0
    assert not c.enclosure_violated()


def test_bessel_sum_rejects_mismatched_measure():
    T, R = diagonal_pair()
    other = fam(np.eye(2), np.eye(2), weights=[1.0, 2.0])
    with pytest.raises(MeasureMismatch):
        certify_bessel_sum(T, other)
    with pytest.raises(BadParameter):
        certify_bessel_sum(T, R, 0)


def test_bessel_sum_scaling_homogeneity(rng):
    for _ in range(20):
        T = random_frame(rng, 2, 2, 3, 5.0)
        R = random_bessel_below(rng, T, 0.5)
        s = rng.uniform(0.01, 1.0)
        M1 = certify_bessel_sum(T, R).extras["M"]
        Ms = certify_bessel_sum(T, R.scaled(s)).extras["M"]
        assert Ms == pytest.approx(s**2 * M1, rel=1e-10)


def test_bessel_sum_both_signs_enclose(rng):
    for _ in range(100):
        d, n, m = (int(v) for v in rng.integers(1, 4, size=3))
        T = random_frame(rng, d, n, m, rng.uniform(1, 30))
        R = random_bessel_below(rng, T, rng.uniform(0.01, 0.99))
        for sign in (1, -1):
            c = certify_bessel_sum(T, R, sign)
            assert c.hypothesis_ok and not c.enclosure_violated()


# -- min-condition -------------------------------------------------------------


def test_optimal_min_constant_examples():
    # P = I, G_T = 4I, G_R = I
    assert optimal_min_constant(scalar_frame(2), scalar_frame(1)) == pytest.approx(max(1 / 4, 1))
    assert optimal_min_constant(scalar_frame(2), scalar_frame(2)) == 0
    assert optimal_min_constant(scalar_frame(1), scalar_frame(-1)) == pytest.approx(4)


def test_min_condition_examples():
    c = certify_min_condition(scalar_frame(2), scalar_frame(1))
    M, A, B = 1.0, 4.0, 4.0
    cert, obs = bounds(c)
    assert cert == pytest.approx((A / (1 + math.sqrt(M)) ** 2, B * (1 + math.sqrt(M)) ** 2))
    assert obs == pytest.approx((1, 1))
    assert c.lower_slack >= 0 and c.upper_slack >= 0
    c = certify_min_condition(scalar_frame(2), scalar_frame(2))
    assert c.extras["optimal_M"] == 0
    assert bounds(c)[0] == pytest.approx(bounds(c)[1])
    c = certify_min_condition(scalar_frame(2), scalar_frame(1), KOperator.from_matrix(2 * I2))
    assert c.extras["converse_applicable"] and c.theorem_id == "min_condition_k"
    c = certify_min_condition(scalar_frame(2), scalar_frame(1), KOperator.from_matrix(0.5 * I2))
    assert not c.extras["converse_applicable"]


def test_min_condition_unbounded():
    T = scalar_frame(1)
    R = fam(np.diag([1.0, 0.0]))
    c = certify_min_condition(T, R)
    assert not c.hypothesis_ok and math.isinf(c.extras["optimal_M"])


def test_min_condition_finite_whenever_r_is_a_frame(rng):
    for _ in range(100):
        d, n, m = (int(v) for v in rng.integers(1, 4, size=3))
        T = random_frame(rng, d, n, m, rng.uniform(1, 30))
        R = random_frame(rng, d, n, m, rng.uniform(1, 30))
        R = T.with_stack(R.stack)
        K = random_k(rng, d, n, "general") if rng.uniform() < 0.5 else None
        c = certify_min_condition(T, R, K)
        assert math.isfinite(c.extras["optimal_M"]) and c.hypothesis_ok
        assert not c.enclosure_violated()


# -- combinations ----------------------------------------------------------------


def test_combination_doubly_tight_example():
    c = certify_combination([scalar_frame(1), scalar_frame(2)], [1, 1], 1)
    assert c.extras["lambda_sq"] == pytest.approx(9)
    A1, lam_sq, B = 1.0, 9.0, [1.0, 4.0]
    expected = (A1 * lam_sq, 1.0**2 * (math.sqrt(B[0]) + math.sqrt(B[1])) ** 2)
    cert, obs = bounds(c)
    assert cert == pytest.approx(expected, abs=1e-12)
    assert obs == pytest.approx((9, 9), abs=1e-12)


def test_combination_identity_and_cancellation(rng):
    F = random_frame(rng, 1, 2, 3, 4.0)
    c = certify_combination([F], [1.0], 1)
    b = optimal_bounds(F)
    assert c.certified.lower == pytest.approx(b.lower)
    assert bounds(c)[1] == pytest.approx((b.lower, b.upper))
    c = certify_combination([F, F], [1, -1], 1)
    assert not c.hypothesis_ok and c.extras["lambda"] == 0
    with pytest.raises(IndexOutOfRange):
        certify_combination([F], [1.0], 2)
    with pytest.raises(CountMismatch):
        certify_combination([F], [1.0, 2.0], 1)


def test_combination_converse_squared_form(rng):
    for _ in range(50):
        d, n, m = (int(v) for v in rng.integers(1, 4, size=3))
        base = random_frame(rng, d, n, m, 10.0)
        fams = [base] + [base.with_stack(random_frame(rng, d, n, m, 10.0).stack) for _ in range(2)]
        alphas = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        c = certify_combination(fams, alphas, int(rng.integers(1, 4)), samples=1000, seed=5)
        assert c.extras["converse_applicable"] and c.extras["converse_ok"]
        assert c.extras["converse_margin"] >= -1e-9
        assert c.extras["sqrt_lambda_conv"] ** 2 == pytest.approx(c.extras["lambda_conv"])


# -- extension -------------------------------------------------------------------


def test_minimal_extension_norm_examples():
    assert minimal_extension_norm(scalar_frame(2), scalar_frame(1)) == pytest.approx(2)
    F = scalar_frame(3)
    assert minimal_extension_norm(F, F) == pytest.approx(1)
    assert math.isinf(minimal_extension_norm(scalar_frame(1), fam(np.diag([1.0, 0.0]))))


def test_extension_example():
    c = certify_extension([scalar_frame(2)], [scalar_frame(1)], 1, 0.25)
    assert c.hypothesis_ok
    assert c.extras["L_norm"] == pytest.approx(2)
    lam, L, A_p, B = 0.25, 2.0, 4.0, [4.0]
    expected = (A_p / L**2, (1 + math.sqrt(lam)) ** 2 * sum(map(math.sqrt, B)) ** 2)
    cert, obs = bounds(c)
    assert cert == pytest.approx(expected)
    assert obs == pytest.approx((1, 1))


def test_extension_zero_perturbation(rng):
    for _ in range(30):
        Ts = [random_frame(rng, 2, 2, 3, 5.0)]
        Ts.append(Ts[0].with_stack(random_frame(rng, 2, 2, 3, 5.0).stack))
        c = certify_extension(Ts, Ts, 1, 0.0)
        assert c.hypothesis_ok
        assert c.certified.lower <= c.observed.lower + 1e-9 * c.scale


def test_extension_kernel_obstruction():
    T = scalar_frame(1)
    Z = fam(np.zeros((2, 2)))
    c = certify_extension([T], [Z], 1, 1.0)
    assert c.extras["ratios"] == pytest.approx([1.0])
    assert not c.hypothesis_ok and math.isinf(c.extras["L_norm"])
    with pytest.raises(CountMismatch):
        certify_extension([T], [], 1, 1.0)


# -- weighted ------------------------------------------------------------------


def test_weighted_identity_case(rng):
    T = random_frame(rng, 2, 1, 3, 4.0)
    K = KOperator.from_matrix(np.eye(2), 2)
    c = certify_weighted(T, T, np.ones(3), np.ones(3), 0.0, 0.0, K)
    assert c.hypothesis_ok and c.extras["path"] == "loewner"
    cert, obs = bounds(c)
    assert cert == pytest.approx(obs)


def test_weighted_scaling_example(rng):
    T = random_frame(rng, 1, 2, 3, 4.0)
    K = random_k(rng, 1, 2, "general")
    R = T.scaled(2.0)
    c = certify_weighted(T, R, 2 * np.ones(3), np.ones(3), 0.0, 0.0, K)
    A = k_frame_bounds(T, K)[0].lower
    assert c.hypothesis_ok
    assert c.certified.lower == pytest.approx(4 * A)
    assert c.observed.lower == pytest.approx(4 * A)


def test_weighted_parameter_checks(rng):
    T = random_frame(rng, 1, 2, 2, 4.0)
    c = certify_weighted(T, T, [1, 1], [1, 1], 0.99, 0.0)
    assert c.hypothesis_ok
    with pytest.raises(BadParameter):
        certify_weighted(T, T, [1, 1], [1, 1], 1.0, 0.0)
    with pytest.raises(BadParameter):
        certify_weighted(T, T, [1, -1], [1, 1], 0.5, 0.0)


def test_weighted_sampling_path_detects_violation():
    T = scalar_frame(1)
    R = scalar_frame(-1)
    c = certify_weighted(T, R, [1.0], [1.0], 0.5, 0.5)
    # ||2x|| <= 0.5 ||x|| + 0.5 ||x|| is false
    assert not c.hypothesis_ok and c.hypothesis_margin < 0
    assert K_NOTE_PRESENT(c)


def K_NOTE_PRESENT(c):
    return any("K*x" in n for n in c.notes)


def test_weighted_sampling_path_accepts_what_loewner_misses():
    # ||(T-R)x|| = 0.6 ||x|| <= 0.5 ||Tx|| + 0.5 ||Rx|| = 0.5 + 0.2 holds,
    # but G_D = 0.36 I exceeds 0.25 G_T + 0.25 G_R = 0.29 I
    c = certify_weighted(scalar_frame(1), scalar_frame(0.4), [1.0], [1.0], 0.5, 0.5)
    assert c.hypothesis_ok and c.extras["path"] == "sampling"
    assert c.extras["loewner_margin"] < 0
    assert not c.enclosure_violated()


# -- K perturbation --------------------------------------------------------------


def test_k_perturbation_examples():
    K = KOperator.from_matrix([[1.0]])
    T, R = scalar_frame(2, 1), scalar_frame(1.5, 1)
    c = certify_k_perturbation(T, R, K, 0.0625, 0.0)
    assert c.hypothesis_ok and c.extras["path"] == "loewner"
    s = 0.0625
    cert, obs = bounds(c)
    assert cert == pytest.approx((4 * (1 - math.sqrt(s)) ** 2, 4 * (1 + math.sqrt(s)) ** 2))
    assert cert == pytest.approx((2.25, 6.25))
    assert obs == pytest.approx((2.25, 2.25))
    c = certify_k_perturbation(T, T, K, 0.0, 0.0)
    assert bounds(c)[0] == pytest.approx(bounds(c)[1])
    with pytest.raises(BadParameter):
        certify_k_perturbation(T, R, K, 1.0, 0.0)
    with pytest.raises(BadParameter):
        certify_k_perturbation(T, R, K, 0.5, 2.0)


def test_k_corollary_matches_beta_call():
    K = KOperator.from_matrix([[1.0]])
    T, R = scalar_frame(2, 1), scalar_frame(1.5, 1)
    c = certify_k_corollary(T, R, K, 0.25)
    d = certify_k_perturbation(T, R, K, 0.0, 0.25)
    assert c.theorem_id == "k_corollary"
    assert bounds(c) == bounds(d)
    A = 4.0
    assert c.certified.lower == pytest.approx(A * (1 - math.sqrt(0.25 / A)) ** 2)


def test_bounds_override_is_used():
    T, R = diagonal_pair()
    c = certify_bessel_sum(T, R, bounds=FrameBounds(2.0, 10.0))
    assert c.certified.lower == pytest.approx((math.sqrt(2) - 1) ** 2)
    assert c.certified.upper == pytest.approx((math.sqrt(10) + 1) ** 2)
