"""
Unit tests for input-transformation defenses and adversarial training
"""
import numpy as np
import pytest
import torch

from src.attacks import preset
from src.defenses import DefenseConfig, adversarial_training, apply_defense, ae_defense, sor_defense, srs_defense
from src.defenses.adversarial import batch_hard_attack
from src.diffnet import TrainConfig, train_classifier
from src.utils.errors import ConfigurationError, InvalidArgumentError, UnsupportedDefenseError


class TestSOR:
    """Test cases for statistical outlier removal"""

    def test_removes_far_outlier(self, cloud):
        with_outlier = np.concatenate([cloud, [[25.0, 25.0, 25.0]]]).astype(np.float32)
        filtered = sor_defense(with_outlier, k=2, alpha=1.1)
        assert not np.any(np.all(filtered == [25.0, 25.0, 25.0], axis=1))
        assert len(filtered) <= len(cloud)

    def test_keeps_order_of_survivors(self, cloud):
        filtered = sor_defense(cloud, k=2, alpha=1.1)
        positions = [int(np.flatnonzero(np.all(cloud == p, axis=1))[0]) for p in filtered]
        assert positions == sorted(positions)

    def test_uniform_spacing_keeps_everything(self):
        line = np.column_stack([np.arange(10.0), np.zeros(10), np.zeros(10)])
        assert len(sor_defense(line, k=2, alpha=1.1)) >= 8

    def test_invalid_k(self, cloud):
        with pytest.raises(InvalidArgumentError):
            sor_defense(cloud, k=len(cloud))


class TestSRS:
    """Test cases for simple random sampling"""

    def test_keep_count(self, rng):
        points = rng.normal(size=(100, 3)).astype(np.float32)
        assert len(srs_defense(points, drop_rate=0.1, seed=0)) == 90
        assert len(srs_defense(points[:15], drop_rate=0.1, seed=0)) == 14

    def test_seeded_and_ordered(self, rng):
        points = rng.normal(size=(50, 3)).astype(np.float32)
        first = srs_defense(points, 0.2, seed=5)
        np.testing.assert_array_equal(first, srs_defense(points, 0.2, seed=5))
        positions = [int(np.flatnonzero(np.all(points == p, axis=1))[0]) for p in first]
        assert positions == sorted(positions)

    def test_zero_rate_is_identity(self, cloud):
        np.testing.assert_array_equal(srs_defense(cloud, 0.0), cloud)

    @pytest.mark.parametrize("rate", [-0.1, 1.0])
    def test_invalid_rate(self, rate, cloud):
        with pytest.raises(InvalidArgumentError):
            srs_defense(cloud, rate)


class TestDefenseDispatch:
    """Test cases for DefenseConfig and apply_defense"""

    def test_dispatch(self, cloud, tiny_ae):
        assert len(apply_defense(DefenseConfig("srs", drop_rate=0.5), cloud)) == 8
        assert apply_defense(DefenseConfig("ae_reconstruct"), cloud, defense_ae=tiny_ae).shape == cloud.shape
        np.testing.assert_array_equal(apply_defense(DefenseConfig("sor"), cloud), sor_defense(cloud))

    def test_ae_reconstruction_matches_direct_call(self, cloud, tiny_ae):
        np.testing.assert_array_equal(
            apply_defense(DefenseConfig("ae_reconstruct"), cloud, defense_ae=tiny_ae), ae_defense(tiny_ae, cloud)
        )

    def test_seed_override(self, rng):
        points = rng.normal(size=(40, 3)).astype(np.float32)
        cfg = DefenseConfig("srs", drop_rate=0.5, seed=1)
        np.testing.assert_array_equal(apply_defense(cfg, points, seed=9), srs_defense(points, 0.5, seed=9))

    def test_dup_net_is_reserved(self, cloud):
        cfg = DefenseConfig("dup_net")
        assert not cfg.is_supported
        with pytest.raises(UnsupportedDefenseError):
            apply_defense(cfg, cloud)

    def test_training_defense_is_not_a_transform(self, cloud):
        with pytest.raises(ConfigurationError):
            apply_defense(DefenseConfig("adversarial_training"), cloud)

    def test_ae_defense_needs_model(self, cloud):
        with pytest.raises(ConfigurationError):
            apply_defense(DefenseConfig("ae_reconstruct"), cloud)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            DefenseConfig("blur")


class TestAdversarialTraining:
    """Test cases for training with regenerated attacks"""

    def test_batch_attack_stays_in_budget(self, tiny_classifier, tiny_dataset):
        clouds = torch.from_numpy(tiny_dataset.clouds[:4])
        labels = torch.from_numpy(tiny_dataset.labels[:4])
        cfg = preset("adv_training", iterations=5, epsilon=0.05)
        attacked = batch_hard_attack(tiny_classifier, clouds, labels, cfg)
        assert attacked.shape == clouds.shape
        assert float((attacked - clouds).abs().max()) <= 0.05 + 1e-6

    def test_zero_mix_reproduces_plain_training(self, tiny_dataset):
        hyper = TrainConfig(epochs=1, batch_size=4)
        hardened = adversarial_training(tiny_dataset, mix_fraction=0.0, hyper=hyper, seed=2)
        plain = train_classifier(tiny_dataset, hyper, seed=2)
        assert hardened.bundle().equals(plain.bundle())

    def test_mixing_changes_the_model(self, tiny_dataset):
        hyper = TrainConfig(epochs=1, batch_size=4)
        attack = preset("adv_training", iterations=2)
        hardened = adversarial_training(tiny_dataset, attack_preset=attack, mix_fraction=0.5, hyper=hyper, seed=2)
        plain = train_classifier(tiny_dataset, hyper, seed=2)
        assert not hardened.bundle().equals(plain.bundle())

    def test_rejects_soft_preset(self, tiny_dataset):
        with pytest.raises(ConfigurationError):
            adversarial_training(tiny_dataset, attack_preset="soft_l2", hyper=TrainConfig(epochs=1))

    def test_rejects_bad_fraction(self, tiny_dataset):
        with pytest.raises(InvalidArgumentError):
            adversarial_training(tiny_dataset, mix_fraction=1.5, hyper=TrainConfig(epochs=1))
