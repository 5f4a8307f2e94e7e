#!/usr/bin/env python3
"""
PCAdv - Main Entry Point
"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import torch

# Import configuration
from .config.settings import settings
from .config.logging_config import setup_logging, structured_logger

from .attacks import preset, run_attack
from .attacks.config import CONSTRAINTS, MODES, PRESETS
from .dataset import build_dataset, load_dataset, save_dataset
from .defenses import adversarial_training
from .diffnet import (
    ARCHITECTURES,
    TrainConfig,
    evaluate_accuracy,
    load_ae,
    load_classifier,
    save_checkpoint,
    train_ae,
    train_classifier,
)
from .harness import (
    ExperimentConfig,
    ae_quality,
    clean_accuracies,
    defense_table,
    emit_results,
    gamma_ablation,
    loss_ablation_from_config,
    read_records,
    run_attack_grid,
    sensitivity_curves,
    transfer_matrix,
)
from .harness.config import TARGET_POLICIES
from .utils.errors import ConfigurationError, PCAdvError

EXIT_ERROR = 2


def _floats(text: str) -> List[float]:
    return [float(value) for value in text.split(",") if value.strip()]


class PCAdvApp:
    """Command-line application: one method per subcommand"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    # Data and training

    def gen_data(self, args: argparse.Namespace) -> int:
        out = Path(args.out)
        splits = ("train", "test") if args.split == "both" else (args.split,)
        counts = {"train": args.n_per_class, "test": args.n_test_per_class}
        for split in splits:
            dataset = build_dataset(split, counts[split], n_points=args.n_points,
                                    noise_sigma=args.noise, base_seed=args.seed)
            save_dataset(dataset, out / f"{split}.pcds")
        return 0

    def train(self, args: argparse.Namespace) -> int:
        torch.set_num_threads(settings.TORCH_THREADS)
        data = load_dataset(args.data, split="train")
        hyper = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                            arch=args.arch, knn_k=args.knn_k)

        if args.hardened:
            model = adversarial_training(data, attack_preset=args.attack_preset,
                                         mix_fraction=args.mix, hyper=hyper, seed=args.seed)
        else:
            model = train_classifier(data, hyper, seed=args.seed)
        save_checkpoint(model, args.out)

        if args.test is not None:
            accuracy = evaluate_accuracy(model, load_dataset(args.test, split="test"))
            structured_logger.log_experiment_event("held_out_accuracy", arch=args.arch, accuracy=round(accuracy, 4))
            print(f"held-out accuracy: {accuracy:.4f}")
        return 0

    def train_ae(self, args: argparse.Namespace) -> int:
        torch.set_num_threads(settings.TORCH_THREADS)
        data = load_dataset(args.data, split="train")
        hyper = TrainConfig.for_ae(epochs=args.epochs, batch_size=args.batch_size,
                                   lr=args.lr, latent_dim=args.latent)
        save_checkpoint(train_ae(data, hyper, seed=args.seed), args.out)
        return 0

    # Single attack

    def attack(self, args: argparse.Namespace) -> int:
        classifier = load_classifier(args.victim)
        ae = load_ae(args.ae) if args.ae else None
        dataset = load_dataset(args.data, split="test")
        cloud, label = dataset[args.index]

        overrides = {
            "mode": args.mode,
            "target": args.target,
            "constraint": args.constraint,
            "epsilon": args.eps,
            "gamma": args.gamma,
            "kappa": args.kappa,
            "iterations": args.iters,
            "n_restarts": args.restarts,
            "seed": args.seed,
        }
        cfg = preset(args.preset, **{key: value for key, value in overrides.items() if value is not None})
        if cfg.use_ae and ae is None:
            raise ConfigurationError("gamma > 0 needs an autoencoder (--ae)")
        self.logger.debug(f"Attack config: {cfg.to_dict()}")

        outcome = run_attack(classifier, ae, cloud, label, cfg)
        if args.out:
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            np.save(out, cloud + outcome.delta)

        print(f"sample {args.index}: label {label} -> predicted {outcome.predicted_label} "
              f"(success={outcome.success_victim}, ae_success={outcome.success_ae})")
        print(f"first success at iteration: {outcome.iterations_to_first_success}")
        print(f"linf={outcome.norms.linf:.4f} l2={outcome.norms.l2:.4f} "
              f"chamfer={outcome.norms.chamfer_symmetric:.5f} emd={outcome.norms.emd}")
        return 0

    # Grid experiments

    def _experiment_config(self, args: argparse.Namespace) -> ExperimentConfig:
        """INI config with command-line overrides of the target policy"""
        cfg = ExperimentConfig.from_file(args.config)
        overrides = {key: getattr(args, key) for key in ("targets", "n_targets") if getattr(args, key, None) is not None}
        if overrides:
            self.logger.info(f"Target policy overrides: {overrides}")
            cfg = replace(cfg, **overrides)
        return cfg

    def eval_transfer(self, args: argparse.Namespace) -> int:
        cfg = self._experiment_config(args)
        records = run_attack_grid(cfg, args.workers)
        emit_results(records, cfg.output_dir)

        clean = clean_accuracies(cfg) if cfg.only_correct else None
        for spec in cfg.attacks:
            matrix = transfer_matrix(records, spec.name)
            print(f"\n[{spec.name}] victim \\ transfer: {' '.join(matrix.transfers)}")
            for victim, row in zip(matrix.victims, matrix.cells):
                print(f"  {victim:<16} " + " ".join(f"{value:.3f}" for value in row))
            score = matrix.transferability_score
            print(f"  transferability: {'n/a' if score is None else f'{score:.4f}'}")

            for model, curve in sensitivity_curves(records, spec.name, clean).items():
                flag = "" if curve.is_monotone else "  (not monotone)"
                print(f"  {model} accuracy: " + " ".join(f"{acc:.2f}" for acc in curve.accuracy) + flag)
        return 0

    def eval_defense(self, args: argparse.Namespace) -> int:
        cfg = self._experiment_config(args)
        if not cfg.defenses:
            raise ConfigurationError("eval-defense needs at least one [defense.<name>] section")
        records = run_attack_grid(cfg, args.workers)
        emit_results(records, cfg.output_dir)

        for model in cfg.models:
            print(f"\n[{model.name}]")
            for row in defense_table(records, model.name):
                print(f"  {row.attack:<14} {row.defense:<22} eps={row.epsilon:<6} success={row.success_rate:.3f}")
        return 0

    def ablate_gamma(self, args: argparse.Namespace) -> int:
        cfg = self._experiment_config(args)
        for row in gamma_ablation(cfg, _floats(args.gammas), args.workers):
            score = "n/a" if row.transfer_score is None else f"{row.transfer_score:.4f}"
            print(f"gamma={row.gamma:<5} victim_success={row.victim_success:.4f} transfer={score}")
        return 0

    def ablate_losses(self, args: argparse.Namespace) -> int:
        cfg = ExperimentConfig.from_file(args.config)
        for row in loss_ablation_from_config(cfg, args.victim, iterations=args.iters, gamma=args.gamma):
            transfer = "n/a" if row.transfer_rate is None else f"{row.transfer_rate:.3f}"
            print(f"{row.variant:<13} gamma={row.gamma:<5} chamfer={row.mean_chamfer_sym:.5f} "
                  f"emd={row.mean_emd:.4f} linf={row.mean_linf:.4f} l2={row.mean_l2:.4f} "
                  f"asr={row.attack_success:.3f} tr={transfer}")
        return 0

    def plot(self, args: argparse.Namespace) -> int:
        written = emit_results(read_records(args.csv), args.out, formats=("svg",))
        for path in written:
            print(path)
        return 0

    def ae_report(self, args: argparse.Namespace) -> int:
        quality = ae_quality(load_ae(args.ae), load_dataset(args.data, split="test"), seed=args.seed)
        print(f"reconstruction chamfer: {quality.mean_reconstruction:.5f}")
        print(f"inter-class baseline:   {quality.random_pair_baseline:.5f}")
        print(f"ratio:                  {quality.ratio:.4f}")
        return 0


def build_parser(app: PCAdvApp) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcadv", description="Transferable adversarial point cloud toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    def add_target_policy(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--targets", choices=TARGET_POLICIES, help="targeted attacks: every wrong label or k random ones")
        sub.add_argument("--n-targets", type=int, help="targets per sample with --targets k-random")

    gen = command("gen-data", app.gen_data, "generate the synthetic shape dataset")
    gen.add_argument("--out", default=settings.DATA_DIR, help="output directory for <split>.pcds")
    gen.add_argument("--split", choices=("train", "test", "both"), default="both")
    gen.add_argument("--n-per-class", type=int, default=200, help="train samples per class")
    gen.add_argument("--n-test-per-class", type=int, default=50)
    gen.add_argument("--n-points", type=int, default=256)
    gen.add_argument("--noise", type=float, default=0.02)
    gen.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    train = command("train", app.train, "train a classifier")
    train.add_argument("--arch", choices=ARCHITECTURES, default="pointnet_tiny")
    train.add_argument("--data", required=True, help="training split (PCDS)")
    train.add_argument("--test", help="held-out split for an accuracy report")
    train.add_argument("--epochs", type=int, default=60)
    train.add_argument("--batch-size", type=int, default=16)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--knn-k", type=int, default=8)
    train.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    train.add_argument("--out", required=True, help="checkpoint path")
    train.add_argument("--hardened", action="store_true", help="adversarial training")
    train.add_argument("--mix", type=float, default=0.5, help="fraction of each batch replaced by attacks")
    train.add_argument("--attack-preset", default="adv_training", choices=sorted(PRESETS))

    train_ae_cmd = command("train-ae", app.train_ae, "train the point cloud autoencoder")
    train_ae_cmd.add_argument("--data", required=True)
    train_ae_cmd.add_argument("--latent", type=int, default=64)
    train_ae_cmd.add_argument("--epochs", type=int, default=120)
    train_ae_cmd.add_argument("--batch-size", type=int, default=16)
    train_ae_cmd.add_argument("--lr", type=float, default=1e-3)
    train_ae_cmd.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    train_ae_cmd.add_argument("--out", required=True)

    attack = command("attack", app.attack, "attack one test sample")
    attack.add_argument("--victim", required=True, help="classifier checkpoint")
    attack.add_argument("--ae", help="autoencoder checkpoint (needed when gamma > 0)")
    attack.add_argument("--data", required=True, help="test split (PCDS)")
    attack.add_argument("--index", type=int, default=0)
    attack.add_argument("--preset", choices=sorted(PRESETS), default="advpc")
    attack.add_argument("--mode", choices=MODES)
    attack.add_argument("--target", type=int)
    attack.add_argument("--constraint", choices=CONSTRAINTS)
    attack.add_argument("--eps", type=float)
    attack.add_argument("--gamma", type=float)
    attack.add_argument("--kappa", type=float)
    attack.add_argument("--iters", type=int)
    attack.add_argument("--restarts", type=int)
    attack.add_argument("--seed", type=int)
    attack.add_argument("--out", help="save the adversarial cloud as .npy")

    for name, handler, help_text in (
        ("eval-transfer", app.eval_transfer, "run the attack grid and report transferability"),
        ("eval-defense", app.eval_defense, "run the attack grid with defenses"),
    ):
        sub = command(name, handler, help_text)
        sub.add_argument("--config", required=True)
        sub.add_argument("--workers", type=int, help=f"worker count (default PCADV_THREADS={settings.PCADV_THREADS})")
        add_target_policy(sub)

    gamma = command("ablate-gamma", app.ablate_gamma, "repeat the grid over a gamma list")
    gamma.add_argument("--config", required=True)
    gamma.add_argument("--gammas", default="0,0.25,0.5,1.0")
    gamma.add_argument("--workers", type=int)
    add_target_policy(gamma)

    losses = command("ablate-losses", app.ablate_losses, "compare distance losses with and without the AE term")
    losses.add_argument("--config", required=True)
    losses.add_argument("--victim", required=True, help="model name from the roster")
    losses.add_argument("--gamma", type=float, default=0.25)
    losses.add_argument("--iters", type=int)

    plot = command("plot", app.plot, "draw success-vs-epsilon charts from results.csv")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--out", required=True)

    report = command("ae-report", app.ae_report, "autoencoder reconstruction quality")
    report.add_argument("--ae", required=True)
    report.add_argument("--data", required=True)
    report.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point"""
    # Setup logging first
    setup_logging()
    logger = logging.getLogger(__name__)

    app = PCAdvApp()
    args = build_parser(app).parse_args(argv)

    try:
        settings.validate()
    except ValueError as e:
        structured_logger.log_error(f"invalid settings: {e}", command=args.command)
        return EXIT_ERROR

    try:
        logger.info(f"Running {args.command}")
        return args.handler(args)
    except PCAdvError as e:
        structured_logger.log_error(str(e), command=args.command, kind=type(e).__name__)
        return EXIT_ERROR
    except OSError as e:
        structured_logger.log_error(f"I/O error: {e}", command=args.command)
        return EXIT_ERROR
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130
    except Exception as e:
        logger.error(f"Fatal error: {e}")
        raise


if __name__ == "__main__":
    sys.exit(main())
