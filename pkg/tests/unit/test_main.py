"""
Unit tests for the command-line entry point
"""
import numpy as np
import pytest

from src.dataset import load_dataset
from src.harness import ExperimentConfig, run_attack_grid
from src.main import EXIT_ERROR, PCAdvApp, build_parser, main


class TestParser:
    """Test cases for subcommand parsing"""

    def test_attack_overrides_default_to_preset(self):
        args = build_parser(PCAdvApp()).parse_args(["attack", "--victim", "v.pckp", "--data", "t.pcds"])
        assert args.preset == "advpc"
        assert args.eps is None and args.gamma is None

    @pytest.mark.parametrize("command", ["eval-transfer", "eval-defense", "ablate-gamma"])
    def test_target_policy_flags(self, command):
        args = build_parser(PCAdvApp()).parse_args(
            [command, "--config", "x.ini", "--targets", "k-random", "--n-targets", "5"]
        )
        assert (args.targets, args.n_targets) == ("k-random", 5)

    def test_unknown_target_policy_exits(self):
        with pytest.raises(SystemExit):
            build_parser(PCAdvApp()).parse_args(["eval-transfer", "--config", "x.ini", "--targets", "some"])

    def test_target_flags_override_config(self, experiment_dir):
        _, write_config = experiment_dir
        app = PCAdvApp()
        path = str(write_config())

        cfg = app._experiment_config(build_parser(app).parse_args(
            ["eval-transfer", "--config", path, "--targets", "all", "--n-targets", "2"]
        ))
        assert (cfg.targets, cfg.n_targets) == ("all", 2)

        untouched = app._experiment_config(build_parser(app).parse_args(["eval-transfer", "--config", path]))
        assert (untouched.targets, untouched.n_targets) == ("k-random", 3)

    def test_invalid_target_count_is_an_error(self, experiment_dir):
        _, write_config = experiment_dir
        assert main(["eval-transfer", "--config", str(write_config()), "--n-targets", "0"]) == EXIT_ERROR

    def test_unknown_command_exits(self):
        with pytest.raises(SystemExit):
            build_parser(PCAdvApp()).parse_args(["serve"])


class TestCommands:
    """Test cases for subcommand handlers"""

    def test_gen_data_writes_both_splits(self, tmp_path):
        code = main(["gen-data", "--out", str(tmp_path), "--n-per-class", "2",
                     "--n-test-per-class", "1", "--n-points", "16"])
        assert code == 0
        assert len(load_dataset(tmp_path / "train.pcds")) == 16
        assert load_dataset(tmp_path / "test.pcds").n_points == 16

    def test_attack_saves_adversarial_cloud(self, experiment_dir):
        root, _ = experiment_dir
        out = root / "adv.npy"
        code = main(["attack", "--victim", str(root / "alpha.pckp"), "--data", str(root / "test.pcds"),
                     "--preset", "baseline", "--eps", "0.05", "--iters", "3", "--restarts", "1",
                     "--out", str(out)])
        assert code == 0
        cloud, _ = load_dataset(root / "test.pcds")[0]
        assert np.abs(np.load(out) - cloud).max() <= 0.05 + 1e-6

    def test_missing_autoencoder_is_an_error(self, experiment_dir):
        root, _ = experiment_dir
        code = main(["attack", "--victim", str(root / "alpha.pckp"), "--data", str(root / "test.pcds"),
                     "--gamma", "0.5"])
        assert code == EXIT_ERROR

    def test_missing_checkpoint_is_an_error(self, tmp_path):
        code = main(["ae-report", "--ae", str(tmp_path / "absent.pckp"), "--data", str(tmp_path / "t.pcds")])
        assert code == EXIT_ERROR

    def test_plot_from_results(self, experiment_dir, capsys):
        root, write_config = experiment_dir
        cfg = ExperimentConfig.from_file(write_config())
        run_attack_grid(cfg, workers=1)

        code = main(["plot", "--csv", str(cfg.output_dir / "results.csv"), "--out", str(root / "charts")])
        assert code == 0
        assert (root / "charts" / "alpha__alpha.svg").exists()
        assert "alpha__alpha.svg" in capsys.readouterr().out

    def test_ae_report(self, experiment_dir, capsys):
        root, _ = experiment_dir
        assert main(["ae-report", "--ae", str(root / "ae.pckp"), "--data", str(root / "test.pcds")]) == 0
        assert "ratio" in capsys.readouterr().out
