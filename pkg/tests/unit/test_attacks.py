"""
Unit tests for losses, attack configuration and the attack loops
"""
import numpy as np
import pytest

from src.attacks import (
    AttackConfig,
    evaluate_attack,
    is_success,
    margin_loss,
    pgd_attack,
    preset,
    run_attack,
    select_untargeted_target,
    soft_attack,
)
from src.attacks.config import LAMBDA_MAX, LAMBDA_MIN
from src.attacks.outcome import BestIterate
from src.attacks.soft import next_lambda, update_bracket
from src.diffnet import build_ae, forward_classifier
from src.geometry import norm_l2, norm_linf
from src.utils.errors import ConfigurationError, InvalidArgumentError


@pytest.fixture
def victim_sample(tiny_classifier, tiny_dataset):
    """A 32-point dataset cloud with the label the untrained victim assigns to it"""
    cloud, _ = tiny_dataset[0]
    return cloud, int(np.argmax(forward_classifier(tiny_classifier, cloud)))


class TestMarginLoss:
    """Test cases for the margin loss and target choice"""

    def test_values(self):
        logits = np.array([1.0, 3.0, 2.0])
        assert margin_loss(logits, 2, 0.0) == 1.0
        assert margin_loss(logits, 1, 0.0) == 0.0
        assert margin_loss(logits, 1, 5.0) == 4.0

    def test_bad_arguments(self):
        with pytest.raises(InvalidArgumentError):
            margin_loss(np.array([1.0, 2.0]), 2, 0.0)
        with pytest.raises(InvalidArgumentError):
            margin_loss(np.array([1.0, 2.0]), 0, -1.0)

    def test_untargeted_target_ties_take_lowest_index(self):
        assert select_untargeted_target(np.array([5.0, 2.0, 2.0]), 0) == 1
        assert select_untargeted_target(np.array([0.0, 9.0, 4.0]), 1) == 2

    def test_untargeted_target_needs_two_classes(self):
        with pytest.raises(InvalidArgumentError):
            select_untargeted_target(np.array([1.0]), 0)

    def test_success_predicate(self):
        logits = np.array([0.1, 0.9, 0.3])
        assert is_success(logits, 0, "untargeted")
        assert not is_success(logits, 1, "untargeted")
        assert is_success(logits, 0, "targeted", target=1)
        assert not is_success(logits, 0, "targeted", target=2)


class TestAttackConfig:
    """Test cases for configuration validation and presets"""

    @pytest.mark.parametrize("overrides", [
        {"mode": "sideways"},
        {"constraint": "l1"},
        {"gamma": 1.5},
        {"kappa": -1.0},
        {"epsilon": -0.1},
        {"iterations": 0},
        {"soft_distance": "hausdorff"},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigurationError):
            AttackConfig(**overrides)

    def test_presets(self):
        assert preset("advpc").gamma == 0.25
        assert preset("baseline").gamma == 0.0
        assert preset("knn_chamfer").kappa == 15.0
        assert preset("advpc", epsilon=0.3).epsilon == 0.3
        assert preset("soft_l2").norm_type == "soft_l2"
        with pytest.raises(ConfigurationError):
            preset("carlini")


class TestBestIterate:
    """Test cases for iterate selection"""

    def test_success_beats_failure_and_smaller_norm_wins(self):
        best = BestIterate()
        best.offer(np.zeros(3), False, 0.0, loss=5.0, target=1)
        assert best.offer(np.ones(3), True, 0.4, loss=9.0, target=1)
        assert not best.offer(np.ones(3) * 2, False, 0.0, loss=0.0, target=1)
        assert best.offer(np.ones(3) * 3, True, 0.2, loss=9.0, target=2)
        assert not best.offer(np.ones(3) * 4, True, 0.2, loss=1.0, target=2)
        assert best.score == 0.2 and best.target == 2

    def test_failures_keep_lowest_loss(self):
        best = BestIterate()
        best.offer(np.zeros(3), False, 0.0, loss=5.0, target=None)
        best.offer(np.ones(3), False, 0.0, loss=3.0, target=None)
        best.offer(np.ones(3) * 2, False, 0.0, loss=4.0, target=None)
        assert best.loss == 3.0
        np.testing.assert_array_equal(best.delta, np.ones(3))


class TestHardAttack:
    """Test cases for the projected gradient attack"""

    def test_linf_budget_respected(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        outcome = pgd_attack(tiny_classifier, None, cloud, label, fast_attack)

        assert outcome.delta.shape == cloud.shape
        assert outcome.delta.dtype == np.float32
        assert norm_linf(outcome.delta) <= np.float32(fast_attack.epsilon)
        assert outcome.norms.linf == norm_linf(outcome.delta)
        assert outcome.success_ae is None

    def test_l2_budget_respected(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        cfg = fast_attack.with_(constraint="l2", epsilon=0.3)
        outcome = pgd_attack(tiny_classifier, None, cloud, label, cfg)
        assert norm_l2(outcome.delta) <= 0.3

    def test_deterministic_given_seed(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        first = pgd_attack(tiny_classifier, None, cloud, label, fast_attack)
        second = pgd_attack(tiny_classifier, None, cloud, label, fast_attack)
        np.testing.assert_array_equal(first.delta, second.delta)
        assert first.loss == second.loss

    def test_zero_budget_returns_zero_perturbation(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        outcome = pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(epsilon=0.0))
        assert norm_linf(outcome.delta) == 0.0
        assert not outcome.success_victim

    def test_flags_match_reevaluation(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        outcome = pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(epsilon=0.5, lr=0.05))
        logits = forward_classifier(tiny_classifier, cloud + outcome.delta)
        assert outcome.success_victim == is_success(logits, label, "untargeted")
        assert outcome.predicted_label == int(np.argmax(logits))
        assert evaluate_attack(tiny_classifier, cloud, outcome, label, "untargeted") == outcome.success_victim

    def test_advpc_with_autoencoder(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        ae = build_ae(len(cloud), latent_dim=8, seed=4)
        outcome = pgd_attack(tiny_classifier, ae, cloud, label, fast_attack.with_(gamma=0.25))
        assert outcome.success_ae is not None
        assert norm_linf(outcome.delta) <= np.float32(fast_attack.epsilon)

    def test_zero_gamma_ignores_autoencoder(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        ae = build_ae(len(cloud), latent_dim=8, seed=4)
        cfg = fast_attack.with_(epsilon=0.3, lr=0.05)
        with_ae = pgd_attack(tiny_classifier, ae, cloud, label, cfg)
        without = pgd_attack(tiny_classifier, None, cloud, label, cfg)
        np.testing.assert_array_equal(with_ae.delta, without.delta)
        assert with_ae.success_victim == without.success_victim
        assert with_ae.loss == without.loss

    def test_targeted_success_is_untargeted_success(self, tiny_classifier, victim_sample, fast_attack, rng):
        for _ in range(500):
            logits = rng.normal(size=4)
            true_label, target = rng.choice(4, size=2, replace=False)
            if is_success(logits, int(true_label), "targeted", target=int(target)):
                assert is_success(logits, int(true_label), "untargeted")

        cloud, label = victim_sample
        for target in range(tiny_classifier.k_classes):
            if target == label:
                continue
            cfg = fast_attack.with_(mode="targeted", target=target, epsilon=1.0, lr=0.1, iterations=20)
            outcome = pgd_attack(tiny_classifier, None, cloud, label, cfg)
            if outcome.success_victim:
                assert outcome.predicted_label == target != label

    def test_gamma_needs_autoencoder(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        with pytest.raises(ConfigurationError):
            pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(gamma=0.25))

    def test_targeted_needs_valid_target(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        with pytest.raises(ConfigurationError):
            pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(mode="targeted"))
        with pytest.raises(InvalidArgumentError):
            pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(mode="targeted", target=label))
        with pytest.raises(InvalidArgumentError):
            pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(mode="targeted", target=99))

    def test_targeted_outcome_carries_target(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        target = (label + 1) % tiny_classifier.k_classes
        outcome = pgd_attack(tiny_classifier, None, cloud, label, fast_attack.with_(mode="targeted", target=target))
        assert outcome.target_label == target

    def test_shrinking_budget_stays_inside_original(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        cfg = fast_attack.with_(epsilon=0.6, lr=0.05, n_restarts=3, shrink_budget=True)
        outcome = pgd_attack(tiny_classifier, None, cloud, label, cfg)
        assert norm_linf(outcome.delta) <= np.float32(0.6)

    def test_soft_constraint_rejected(self, tiny_classifier, victim_sample):
        cloud, label = victim_sample
        with pytest.raises(ConfigurationError):
            pgd_attack(tiny_classifier, None, cloud, label, preset("soft_l2", gamma=0.0))


class TestSoftAttack:
    """Test cases for the soft-constraint attack"""

    @pytest.mark.parametrize("distance", ["l2", "chamfer", "emd"])
    def test_runs_for_every_distance(self, distance, tiny_classifier, victim_sample):
        cloud, label = victim_sample
        cfg = AttackConfig(constraint="soft", soft_distance=distance, gamma=0.0, iterations=4,
                           n_restarts=1, binary_steps=2, emd_refresh=2, seed=3)
        outcome = soft_attack(tiny_classifier, None, cloud, label, cfg)
        assert outcome.delta.shape == cloud.shape
        assert np.all(np.isfinite(outcome.delta))
        assert outcome.norms.emd is not None

    def test_dispatch(self, tiny_classifier, victim_sample):
        cloud, label = victim_sample
        cfg = preset("soft_l2", iterations=3, n_restarts=1, binary_steps=1)
        first = run_attack(tiny_classifier, None, cloud, label, cfg)
        second = soft_attack(tiny_classifier, None, cloud, label, cfg)
        np.testing.assert_array_equal(first.delta, second.delta)

    def test_huge_weight_keeps_the_clean_cloud(self, tiny_classifier, victim_sample):
        cloud, label = victim_sample
        cfg = AttackConfig(constraint="soft", soft_distance="l2", gamma=0.0, soft_lambda=1e9, lr=1e-4,
                           iterations=3, n_restarts=1, binary_steps=1, seed=3)
        outcome = soft_attack(tiny_classifier, None, cloud, label, cfg)
        assert not outcome.success_victim
        assert np.abs(outcome.delta).max() == 0.0

    def test_deterministic_given_seed(self, tiny_classifier, victim_sample):
        cloud, label = victim_sample
        cfg = AttackConfig(constraint="soft", soft_distance="chamfer", gamma=0.0, iterations=4,
                           n_restarts=2, binary_steps=2, seed=5)
        first = soft_attack(tiny_classifier, None, cloud, label, cfg)
        second = soft_attack(tiny_classifier, None, cloud, label, cfg)
        np.testing.assert_array_equal(first.delta, second.delta)
        assert first.loss == second.loss

    def test_hard_constraint_rejected(self, tiny_classifier, victim_sample, fast_attack):
        cloud, label = victim_sample
        with pytest.raises(ConfigurationError):
            soft_attack(tiny_classifier, None, cloud, label, fast_attack)


class TestLambdaSearch:
    """Test cases for the soft-weight schedule"""

    def test_steps_by_ten_until_bracketed(self):
        assert next_lambda(10.0, True, None, None) == 100.0
        assert next_lambda(10.0, False, None, None) == 1.0

    def test_bisects_once_bracketed(self):
        assert next_lambda(100.0, False, 10.0, 100.0) == 55.0

    def test_clamped(self):
        assert next_lambda(LAMBDA_MAX, True, None, None) == LAMBDA_MAX
        assert next_lambda(LAMBDA_MIN, False, None, None) == LAMBDA_MIN

    def test_bracket_tracks_largest_success_and_smallest_failure(self):
        assert update_bracket(10.0, True, None, None) == (10.0, None)
        assert update_bracket(5.0, True, 10.0, 100.0) == (10.0, 100.0)
        assert update_bracket(55.0, False, 10.0, 100.0) == (10.0, 55.0)

    def test_contradicting_success_drops_upper_bound(self):
        lower, upper = update_bracket(200.0, True, 10.0, 100.0)
        assert (lower, upper) == (200.0, None)
        assert next_lambda(200.0, True, lower, upper) == 2000.0

    def test_contradicting_failure_drops_lower_bound(self):
        lower, upper = update_bracket(2.0, False, 10.0, 100.0)
        assert (lower, upper) == (None, 2.0)
        assert next_lambda(2.0, False, lower, upper) == 0.2

    def test_bracket_never_crosses(self, rng):
        lower, upper = None, None
        for _ in range(200):
            lam = float(10.0 ** rng.uniform(-2, 6))
            lower, upper = update_bracket(lam, bool(rng.random() < 0.5), lower, upper)
            if lower is not None and upper is not None:
                assert lower < upper
