"""
Desk-scale acceptance runs: trained models, attack potency, grid shape and determinism

These train every model once per module and take several minutes on a CPU.
"""
import numpy as np
import pytest

from src.attacks import evaluate_attack, preset, run_attack
from src.dataset import build_dataset, save_dataset
from src.defenses import DefenseConfig, apply_defense
from src.diffnet import TrainConfig, evaluate_accuracy, predict, save_checkpoint, train_ae, train_classifier
from src.harness import (
    ExperimentConfig,
    ae_quality,
    defense_table,
    read_records,
    run_attack_grid,
    sensitivity_curves,
    transfer_matrix,
)

pytestmark = [pytest.mark.integration, pytest.mark.slow]

TOLERANCE = 0.02


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    """Default synthetic splits with both classifiers and the autoencoder trained and saved"""
    root = tmp_path_factory.mktemp("desk")
    train = build_dataset("train", n_per_class=200)
    test = build_dataset("test", n_per_class=50)
    save_dataset(test, root / "test.pcds")

    models = {
        "pointnet": train_classifier(train, TrainConfig(arch="pointnet_tiny"), seed=0),
        "edgeconv": train_classifier(train, TrainConfig(arch="edgeconv_lite"), seed=1),
    }
    for name, model in models.items():
        save_checkpoint(model, root / f"{name}.pckp")
    ae = train_ae(train, TrainConfig.for_ae(), seed=2)
    save_checkpoint(ae, root / "ae.pckp")
    defense_ae = train_ae(train, TrainConfig.for_ae(), seed=3)
    save_checkpoint(defense_ae, root / "defense_ae.pckp")

    return {"root": root, "test": test, "models": models, "ae": ae, "defense_ae": defense_ae}


def write_experiment(root, output, epsilons, samples, defenses=""):
    path = root / f"{output}.ini"
    path.write_text(
        "\n".join([
            "[experiment]",
            "seed = 5",
            f"output_dir = {output}",
            f"samples_per_cell = {samples}",
            "",
            "[dataset]",
            "path = test.pcds",
            "",
            "[autoencoder]",
            "attack = ae.pckp",
            "defense = defense_ae.pckp",
            "",
            "[model.pointnet]",
            "checkpoint = pointnet.pckp",
            "",
            "[model.edgeconv]",
            "checkpoint = edgeconv.pckp",
            "",
            "[attack.advpc]",
            "preset = advpc",
            f"epsilons = {epsilons}",
            "",
            "[attack.baseline]",
            "preset = baseline",
            f"epsilons = {epsilons}",
            "",
        ]) + defenses,
        encoding="utf-8",
    )
    return ExperimentConfig.from_file(path)


class TestTrainedModels:
    """Held-out accuracy and reconstruction quality"""

    def test_pointnet_accuracy(self, desk):
        assert evaluate_accuracy(desk["models"]["pointnet"], desk["test"]) >= 0.90

    def test_edgeconv_accuracy(self, desk):
        assert evaluate_accuracy(desk["models"]["edgeconv"], desk["test"]) >= 0.85

    def test_autoencoder_beats_random_pairs(self, desk):
        assert ae_quality(desk["ae"], desk["test"], seed=0).ratio < 0.2

    def test_defenses_keep_clean_predictions(self, desk):
        model = desk["models"]["pointnet"]
        clean = predict(model, desk["test"].clouds)
        for cfg in (DefenseConfig("srs", drop_rate=0.1), DefenseConfig("sor")):
            defended = np.array([
                predict(model, apply_defense(cfg, cloud, seed=i)[None])[0]
                for i, cloud in enumerate(desk["test"].clouds[:100])
            ])
            assert np.mean(defended == clean[:100]) >= 0.85


class TestAttackPotency:
    """Untargeted hard attacks on correctly classified samples"""

    @pytest.mark.parametrize("name", ["advpc", "baseline"])
    def test_linf_success(self, desk, name):
        model = desk["models"]["pointnet"]
        test = desk["test"]
        correct = np.flatnonzero(predict(model, test.clouds) == test.labels)[:100]
        cfg = preset(name, epsilon=0.3, iterations=200, n_restarts=2, seed=11)

        successes = []
        for index in correct:
            cloud, label = test[int(index)]
            outcome = run_attack(model, desk["ae"] if cfg.use_ae else None, cloud, label, cfg)
            assert np.abs(outcome.delta).max() <= 0.3 + 1e-6
            successes.append(evaluate_attack(model, cloud, outcome, label, "untargeted"))
        assert np.mean(successes) >= 0.90


class TestGrid:
    """Full grid runs through the harness"""

    @pytest.fixture(scope="class")
    def records(self, desk):
        cfg = write_experiment(
            desk["root"], "grid", "0.05,0.18,0.45", samples=40,
            defenses="[defense.srs]\nkind = srs\ndrop_rate = 0.1\n\n[defense.ae]\nkind = ae_reconstruct\n",
        )
        return run_attack_grid(cfg)

    def test_sensitivity_curves_are_monotone(self, records):
        for attack in ("advpc", "baseline"):
            curves = sensitivity_curves(records, attack)
            assert set(curves) == {"pointnet", "edgeconv"}
            assert all(curve.is_monotone for curve in curves.values())

    def test_transfer_not_worse_than_baseline(self, records):
        advpc = transfer_matrix(records, "advpc")
        baseline = transfer_matrix(records, "baseline")
        for victim, transfer in (("pointnet", "edgeconv"), ("edgeconv", "pointnet")):
            assert advpc.cell(victim, transfer) >= baseline.cell(victim, transfer) - TOLERANCE

    @pytest.mark.parametrize("defense", ["ae", "srs"])
    def test_defense_resilience_not_worse_than_baseline(self, records, defense):
        rows = {(r.attack, r.epsilon): r.success_rate
                for r in defense_table(records, "pointnet") if r.defense == defense}
        for eps in (0.18, 0.45):
            assert rows[("advpc", eps)] >= rows[("baseline", eps)] - TOLERANCE


class TestDeterminism:
    """Same seed, same CSV"""

    def test_repeated_grid_is_identical(self, desk):
        paths = []
        for output in ("repeat_a", "repeat_b"):
            cfg = write_experiment(desk["root"], output, "0.05,0.18,0.45", samples=20)
            run_attack_grid(cfg, workers=2)
            paths.append(cfg.output_dir / "results.csv")
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert len(read_records(paths[0])) == 2 * 3 * 2 * 2
