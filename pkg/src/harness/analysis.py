"""
Tables derived from result records and from targeted experiment runs
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm import tqdm

from ..attacks import AttackConfig, evaluate_attack, run_attack
from ..config.logging_config import progress_disabled, structured_logger
from ..dataset import LabeledDataset, load_dataset
from ..diffnet import evaluate_accuracy, load_ae, load_classifier
from ..diffnet.models import AEModel, ClassifierModel
from ..geometry import EMD_EXACT_CAP, chamfer, emd
from ..utils.errors import ConfigurationError, CoverageError, ValidationError
from .config import ExperimentConfig
from .grid import GridRunner, run_attack_grid
from .records import NO_DEFENSE, ResultRecord

logger = logging.getLogger(__name__)

# Allowed rise of a sensitivity curve between neighboring budgets
MONOTONE_TOLERANCE = 0.05


def _ordered(values) -> List[str]:
    return list(dict.fromkeys(values))


@dataclass(frozen=True)
class TransferMatrix:
    victims: Tuple[str, ...]
    transfers: Tuple[str, ...]
    cells: Tuple[Tuple[float, ...], ...]

    @property
    def transferability_score(self) -> Optional[float]:
        """Mean of the off-diagonal cells; None for a single-model roster"""
        off_diagonal = [
            self.cells[i][j]
            for i, victim in enumerate(self.victims)
            for j, transfer in enumerate(self.transfers)
            if victim != transfer
        ]
        if not off_diagonal:
            return None
        return float(np.mean(off_diagonal))

    def cell(self, victim: str, transfer: str) -> float:
        return self.cells[self.victims.index(victim)][self.transfers.index(transfer)]


def transfer_matrix(records: Sequence[ResultRecord], attack_name: str) -> TransferMatrix:
    """Victim x transfer success rates averaged over the budget grid (no defense)"""
    rows = [r for r in records if r.attack == attack_name and r.defense == NO_DEFENSE]
    if not rows:
        raise CoverageError([(attack_name,)])

    names = _ordered([r.victim for r in rows] + [r.transfer for r in rows])
    epsilons = sorted({r.epsilon for r in rows})
    rates: Dict[Tuple[str, str], Dict[float, float]] = defaultdict(dict)
    for r in rows:
        rates[(r.victim, r.transfer)][r.epsilon] = r.success_rate

    missing = [
        (attack_name, victim, transfer, repr(eps))
        for victim in names for transfer in names for eps in epsilons
        if eps not in rates[(victim, transfer)]
    ]
    if missing:
        raise CoverageError(missing)

    cells = tuple(
        tuple(float(np.mean([rates[(v, t)][eps] for eps in epsilons])) for t in names)
        for v in names
    )
    return TransferMatrix(tuple(names), tuple(names), cells)


@dataclass(frozen=True)
class SensitivityCurve:
    model: str
    epsilons: Tuple[float, ...]
    accuracy: Tuple[float, ...]

    @property
    def max_increase(self) -> float:
        """Largest accuracy gain between consecutive budgets (0 for a non-increasing curve)"""
        gains = np.diff(self.accuracy)
        return float(max(gains.max(), 0.0)) if gains.size else 0.0

    @property
    def is_monotone(self) -> bool:
        return self.max_increase <= MONOTONE_TOLERANCE


def sensitivity_curves(
    records: Sequence[ResultRecord],
    attack_name: Optional[str] = None,
    clean_accuracy: Optional[Mapping[str, float]] = None,
) -> Dict[str, SensitivityCurve]:
    """
    Accuracy = 1 - self-attack success rate per model over the budget grid
    Grids that attack only correctly classified samples pass each model's
    clean accuracy, which scales the rates back to the whole split
    """
    rows = [r for r in records if r.defense == NO_DEFENSE and r.victim == r.transfer]
    if attack_name is None and rows:
        attack_name = rows[0].attack
    rows = [r for r in rows if r.attack == attack_name]

    curves = {}
    for model in _ordered(r.victim for r in rows):
        clean = 1.0 if clean_accuracy is None else float(clean_accuracy[model])
        points = sorted((r.epsilon, clean * (1.0 - r.success_rate)) for r in rows if r.victim == model)
        curves[model] = SensitivityCurve(
            model, tuple(eps for eps, _ in points), tuple(acc for _, acc in points)
        )
        if not curves[model].is_monotone:
            logger.warning(f"Sensitivity curve of {model} rises by {curves[model].max_increase:.3f}")
    return curves


def clean_accuracies(cfg: ExperimentConfig) -> Dict[str, float]:
    """Unattacked accuracy of every roster model on the evaluation split"""
    if not cfg.dataset_path.exists():
        raise ConfigurationError(f"dataset not found: {cfg.dataset_path}")
    dataset = load_dataset(cfg.dataset_path, split="test")

    accuracies = {}
    for spec in cfg.models:
        if not spec.checkpoint.exists():
            raise ConfigurationError(f"checkpoint for model '{spec.name}' not found: {spec.checkpoint}")
        accuracies[spec.name] = evaluate_accuracy(load_classifier(spec.checkpoint), dataset)
    structured_logger.log_experiment_event("clean_accuracy", **{k: round(v, 4) for k, v in accuracies.items()})
    return accuracies


@dataclass(frozen=True)
class DefenseRow:
    attack: str
    defense: str
    epsilon: float
    success_rate: float


def defense_table(records: Sequence[ResultRecord], victim: str) -> List[DefenseRow]:
    """Success of attacks on a victim evaluated on the same model under each defense"""
    return [
        DefenseRow(r.attack, r.defense, r.epsilon, r.success_rate)
        for r in records
        if r.victim == victim and r.transfer == victim
    ]


@dataclass(frozen=True)
class GammaRow:
    gamma: float
    victim_success: float
    transfer_score: Optional[float]


def gamma_ablation(cfg: ExperimentConfig, gammas: Sequence[float], workers: Optional[int] = None) -> List[GammaRow]:
    """Repeat the grid for each gamma in its own output subdirectory"""
    if len(cfg.models) < 2:
        raise ConfigurationError("gamma ablation needs at least two models in the roster")

    table = []
    for gamma in gammas:
        run_cfg = cfg.with_gamma(gamma, output_dir=Path(cfg.output_dir) / f"gamma_{gamma!r}")
        records = run_attack_grid(run_cfg, workers)
        self_rows = [r.success_rate for r in records if r.defense == NO_DEFENSE and r.victim == r.transfer]
        scores = [transfer_matrix(records, spec.name).transferability_score for spec in run_cfg.attacks]
        scores = [s for s in scores if s is not None]
        table.append(GammaRow(
            gamma=float(gamma),
            victim_success=float(np.mean(self_rows)),
            transfer_score=float(np.mean(scores)) if scores else None,
        ))
        structured_logger.log_experiment_event("gamma_ablation_row", **vars(table[-1]))
    return table


@dataclass(frozen=True)
class LossAblationRow:
    variant: str
    gamma: float
    mean_chamfer_sym: float
    mean_emd: float
    mean_linf: float
    mean_l2: float
    attack_success: float
    transfer_rate: Optional[float]


# Budgets of the hard variants in the loss ablation
ABLATION_BUDGETS = {"linf": 0.18, "l2": 1.0}


def loss_ablation_variants(gamma: float = 0.25) -> List[Tuple[str, AttackConfig]]:
    base = [
        ("soft_chamfer", AttackConfig(constraint="soft", soft_distance="chamfer")),
        ("soft_emd", AttackConfig(constraint="soft", soft_distance="emd", emd_approximate=True)),
        ("soft_l2", AttackConfig(constraint="soft", soft_distance="l2")),
        ("hard_linf", AttackConfig(constraint="linf", epsilon=ABLATION_BUDGETS["linf"])),
        ("hard_l2", AttackConfig(constraint="l2", epsilon=ABLATION_BUDGETS["l2"])),
    ]
    return [(name, cfg.with_(gamma=g)) for name, cfg in base for g in (0.0, gamma)]


def loss_ablation(
    victim: ClassifierModel,
    others: Dict[str, ClassifierModel],
    ae: Optional[AEModel],
    samples: Sequence[Tuple[np.ndarray, int]],
    seed: int = 0,
    gamma: float = 0.25,
    iterations: Optional[int] = None,
) -> List[LossAblationRow]:
    """Distortion, victim success and transfer rate of each loss variant without and with the AE term"""
    if not samples:
        raise ValidationError("loss ablation needs at least one sample")

    table = []
    for name, cfg in loss_ablation_variants(gamma):
        if iterations is not None:
            cfg = cfg.with_(iterations=iterations)
        chamfers, emds, linfs, l2s, hits, transfers = [], [], [], [], [], []
        for index, (cloud, label) in enumerate(tqdm(samples, desc=f"{name} gamma={cfg.gamma}", leave=False,
                                                    disable=progress_disabled())):
            outcome = run_attack(victim, ae, cloud, label, cfg.with_(seed=seed + index))
            adversarial = cloud + outcome.delta
            chamfers.append(outcome.norms.chamfer_symmetric)
            emds.append(emd(adversarial, cloud, approximate=len(cloud) > EMD_EXACT_CAP))
            linfs.append(outcome.norms.linf)
            l2s.append(outcome.norms.l2)
            hits.append(outcome.success_victim)
            transfers.extend(evaluate_attack(model, cloud, outcome, label, cfg.mode) for model in others.values())

        table.append(LossAblationRow(
            variant=name,
            gamma=cfg.gamma,
            mean_chamfer_sym=float(np.mean(chamfers)),
            mean_emd=float(np.mean(emds)),
            mean_linf=float(np.mean(linfs)),
            mean_l2=float(np.mean(l2s)),
            attack_success=float(np.mean(hits)),
            transfer_rate=float(np.mean(transfers)) if transfers else None,
        ))
        structured_logger.log_experiment_event("loss_ablation_row", **vars(table[-1]))
    return table


@dataclass(frozen=True)
class AEQuality:
    mean_reconstruction: float
    random_pair_baseline: float

    @property
    def ratio(self) -> float:
        return self.mean_reconstruction / self.random_pair_baseline


def ae_quality(ae: AEModel, dataset: LabeledDataset, seed: int = 0, batch_size: int = 64) -> AEQuality:
    """
    Mean symmetric Chamfer of reconstructions against the mean symmetric
    Chamfer between random pairs of test clouds from different classes
    """

    if len(dataset) == 0 or len(np.unique(dataset.labels)) < 2:
        raise ValidationError("AE quality needs a dataset with at least two classes")

    reconstructions = []
    with torch.no_grad():
        for start in range(0, len(dataset), batch_size):
            batch = torch.from_numpy(dataset.clouds[start:start + batch_size])
            reconstructions.append(ae(batch).numpy())
    reconstructions = np.concatenate(reconstructions)
    reconstruction = float(np.mean([
        chamfer(cloud, rebuilt, "symmetric") for cloud, rebuilt in zip(dataset.clouds, reconstructions)
    ]))

    rng = np.random.default_rng(seed)
    pairs = []
    for index, label in enumerate(dataset.labels):
        partners = np.flatnonzero(dataset.labels != label)
        partner = int(rng.choice(partners))
        pairs.append(chamfer(dataset.clouds[index], dataset.clouds[partner], "symmetric"))

    quality = AEQuality(reconstruction, float(np.mean(pairs)))
    structured_logger.log_experiment_event(
        "ae_quality",
        reconstruction=round(quality.mean_reconstruction, 6),
        baseline=round(quality.random_pair_baseline, 6),
        ratio=round(quality.ratio, 4),
    )
    return quality


def loss_ablation_from_config(cfg: ExperimentConfig, victim: str, iterations: Optional[int] = None,
                              gamma: float = 0.25) -> List[LossAblationRow]:
    """Loss ablation on the roster, autoencoder and sample selection of an experiment config"""
    cfg.model(victim)
    runner = GridRunner(cfg)
    runner.load()
    if runner.attack_ae is None and cfg.attack_ae is not None:
        runner.attack_ae = load_ae(cfg.attack_ae)
    if runner.attack_ae is None:
        raise ConfigurationError("loss ablation needs [autoencoder] attack")

    samples = [(cloud, label) for _, cloud, label in runner.samples(victim)]
    others = {name: model for name, model in runner.models.items() if name != victim}
    return loss_ablation(runner.models[victim], others, runner.attack_ae, samples,
                         seed=cfg.seed, gamma=gamma, iterations=iterations)
