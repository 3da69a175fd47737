import numpy as np
import pytest

from conftest import random_psd
from opframes.cstar import pencil_sup
from opframes.errors import BadParameter, NotAFrame
from opframes.frames import frame_gram, optimal_bounds
from opframes.harness import (
    CampaignConfig,
    K_KINDS,
    random_bessel_below,
    random_frame,
    random_k,
    run_campaign,
    sampling_oracle,
)
from opframes.perturbation import THEOREMS, certify_bessel_sum
from opframes.reporting import emit_report


@pytest.mark.parametrize("kappa", [1.0, 4.0, 100.0])
def test_random_frame_condition_number(kappa):
    for seed in range(20):
        b = optimal_bounds(random_frame(seed, 2, 3, 4, kappa))
        assert kappa / 2 <= b.upper / b.lower <= 2 * kappa


def test_random_frame_unit_mean_weights_and_determinism():
    F = random_frame(7, 3, 2, 5, 10.0)
    assert F.weights.mean() == pytest.approx(1.0)
    G = random_frame(7, 3, 2, 5, 10.0)
    assert np.array_equal(F.stack, G.stack) and np.array_equal(F.weights, G.weights)


def test_random_frame_single_operator():
    F = random_frame(3, 2, 2, 1, 3.0)
    M = F.stack[0]
    assert np.allclose(frame_gram(F), F.weights[0] * M @ M.conj().T)
    with pytest.raises(BadParameter):
        random_frame(3, 1, 1, 1, 0.5)


def test_random_bessel_below_ratio():
    for seed in range(20):
        T = random_frame(seed, 2, 2, 3, 5.0)
        A = optimal_bounds(T).lower
        R = random_bessel_below(seed + 100, T, 0.5)
        assert optimal_bounds(R).upper == pytest.approx(0.5 * A, rel=1e-9)
        assert certify_bessel_sum(T, R).hypothesis_ok


def test_random_bessel_below_rejects_non_frames():
    T = random_frame(1, 1, 2, 2, 2.0)
    Z = T.with_stack(np.zeros_like(T.stack))
    with pytest.raises(NotAFrame):
        random_bessel_below(0, Z, 0.5)
    with pytest.raises(BadParameter):
        random_bessel_below(0, T, 1.0)


def test_random_k_kinds(rng):
    for kind in K_KINDS + ("identity",):
        K = random_k(rng, 2, 2, kind)
        assert K.matrix.shape == (4, 4)
    K = random_k(rng, 1, 3, "coisometry")
    assert np.allclose(K.gram(), np.eye(3))


def test_sampling_oracle_examples():
    I = np.eye(3)
    assert sampling_oracle(I, I, 10, 0) == pytest.approx(1.0)
    assert sampling_oracle(np.diag([1.0, 0.0]), np.diag([2.0, 1.0]), 50, 0) == pytest.approx(0.5, abs=1e-12)
    assert np.isfinite(sampling_oracle(np.diag([1.0, 0.0]), np.diag([2.0, 1.0]), 0, 0))
    assert sampling_oracle(np.diag([1.0, 0.0]), np.diag([2.0, 1.0]), 0, 0, mode="inf") == pytest.approx(0.0)


def test_sampling_oracle_never_exceeds_pencil(rng):
    for _ in range(300):
        N = int(rng.integers(1, 7))
        P = random_psd(rng, N, int(rng.integers(0, N + 1)))
        Q = random_psd(rng, N, N)
        value = pencil_sup(P, Q).value
        assert sampling_oracle(P, Q, 100, int(rng.integers(1 << 30))) <= value + 1e-9 * max(1.0, value)


def test_campaign_single_trial():
    report = run_campaign(CampaignConfig(seed=3, trials=1, theorems=("bessel_sum_plus",)))
    s = report.summaries["bessel_sum_plus"]
    assert s.trials == 1 and s.enclosure_failures == 0 and s.errors == 0
    assert report.enclosure_failures == 0


def test_campaign_deterministic_and_order_independent():
    cfg = CampaignConfig(seed=11, trials=3, theorems=THEOREMS)
    a = emit_report(run_campaign(cfg))
    b = emit_report(run_campaign(cfg))
    assert a == b
    c = emit_report(run_campaign(CampaignConfig(seed=11, trials=3, theorems=THEOREMS, workers=2)))
    assert a == c
    assert emit_report(run_campaign(CampaignConfig(seed=12, trials=3))) != a


def test_campaign_config_validation():
    with pytest.raises(BadParameter):
        CampaignConfig(trials=0)
    with pytest.raises(BadParameter):
        CampaignConfig(dims=((1, 0, 2),))
    with pytest.raises(BadParameter):
        CampaignConfig(theorems=("nope",))
