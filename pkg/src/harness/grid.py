"""
Attack grid orchestration: cells, per-cell seeds, resumable async execution
"""
import asyncio
import hashlib
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from tqdm import tqdm

from ..attacks import evaluate_attack, run_attack
from ..config.logging_config import progress_disabled, structured_logger
from ..config.settings import settings
from ..dataset import LabeledDataset, load_dataset
from ..defenses.config import apply_defense
from ..diffnet import load_ae, load_classifier, predict
from ..diffnet.models import AEModel, ClassifierModel
from ..monitoring.resources import ResourceMonitor, default_worker_count
from ..utils.errors import ConfigurationError, PCAdvError
from .config import AttackSpec, DefenseSpec, ExperimentConfig
from .records import NO_DEFENSE, RecordKey, ResultRecord, ResultStore

RESULTS_FILE = "results.csv"


def cell_seed(seed: int, victim: str, attack: str, epsilon: float, sample_index: int,
              target: Optional[int] = None) -> int:
    """Stable 63-bit seed of one attack, independent of scheduling"""
    text = f"{seed}|{victim}|{attack}|{epsilon!r}|{sample_index}|{target}"
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & 0x7FFF_FFFF_FFFF_FFFF


@dataclass(frozen=True)
class Cell:
    attack: AttackSpec
    victim: str
    epsilon: float

    @property
    def label(self) -> str:
        return f"{self.attack.name}/{self.victim}/eps={self.epsilon}"


class GridRunner:
    """Runs every (attack, victim, epsilon) cell and persists one record per evaluation"""

    def __init__(self, cfg: ExperimentConfig, workers: Optional[int] = None):
        self.logger = logging.getLogger(__name__)
        self.cfg = cfg
        self.workers = workers or cfg.workers or default_worker_count()
        self.store = ResultStore(cfg.output_dir / RESULTS_FILE)
        self.monitor = ResourceMonitor()
        self.attacks_executed = 0

        self.defenses: Tuple[DefenseSpec, ...] = tuple(d for d in cfg.defenses if d.config.is_supported)
        for spec in cfg.defenses:
            if not spec.config.is_supported:
                self.logger.warning(f"Defense '{spec.name}' ({spec.config.kind}) is unsupported, rows skipped")

        self.models: Dict[str, ClassifierModel] = {}
        self.hardened: Dict[str, ClassifierModel] = {}
        self.attack_ae: Optional[AEModel] = None
        self.defense_ae: Optional[AEModel] = None
        self.dataset: Optional[LabeledDataset] = None
        self._samples: Dict[str, List[Tuple[int, np.ndarray, int]]] = {}

    # Roster and cells

    def cells(self) -> List[Cell]:
        return [
            Cell(attack, model.name, epsilon)
            for attack in self.cfg.attacks
            for model in self.cfg.models
            for epsilon in attack.epsilons
        ]

    def evaluations(self) -> List[Tuple[str, str]]:
        """(transfer model, defense) pairs evaluated for every attack"""
        pairs = []
        for model in self.cfg.models:
            pairs.append((model.name, NO_DEFENSE))
            for defense in self.defenses:
                if defense.config.kind == "adversarial_training" and model.hardened_checkpoint is None:
                    continue
                pairs.append((model.name, defense.name))
        return pairs

    def expected_keys(self, cell: Cell) -> List[RecordKey]:
        return [
            (cell.attack.name, cell.victim, transfer, defense, cell.epsilon)
            for transfer, defense in self.evaluations()
        ]

    def sort_key(self, record: ResultRecord) -> tuple:
        def position(names: List[str], name: str) -> tuple:
            return (names.index(name), "") if name in names else (len(names), name)

        attacks = [a.name for a in self.cfg.attacks]
        models = [m.name for m in self.cfg.models]
        defenses = [NO_DEFENSE] + [d.name for d in self.cfg.defenses]
        return (
            position(attacks, record.attack),
            position(models, record.victim),
            record.epsilon,
            position(models, record.transfer),
            position(defenses, record.defense),
        )

    # Loading

    def load(self) -> None:
        """Load checkpoints and the evaluation split"""
        for spec in self.cfg.models:
            if not spec.checkpoint.exists():
                raise ConfigurationError(f"checkpoint for model '{spec.name}' not found: {spec.checkpoint}")
            self.models[spec.name] = load_classifier(spec.checkpoint)
            if spec.hardened_checkpoint is not None:
                if not spec.hardened_checkpoint.exists():
                    raise ConfigurationError(
                        f"hardened checkpoint for model '{spec.name}' not found: {spec.hardened_checkpoint}"
                    )
                self.hardened[spec.name] = load_classifier(spec.hardened_checkpoint)

        if any(d.config.kind == "adversarial_training" for d in self.defenses):
            missing = [m.name for m in self.cfg.models if m.hardened_checkpoint is None]
            if missing:
                self.logger.warning(f"No hardened checkpoint for {missing}: adversarial training rows skipped")

        if any(a.config.use_ae for a in self.cfg.attacks):
            if self.cfg.attack_ae is None or not self.cfg.attack_ae.exists():
                raise ConfigurationError(f"attack autoencoder checkpoint not found: {self.cfg.attack_ae}")
            self.attack_ae = load_ae(self.cfg.attack_ae)
        if any(d.config.kind == "ae_reconstruct" for d in self.defenses):
            if self.cfg.defense_ae is None or not self.cfg.defense_ae.exists():
                raise ConfigurationError(f"defense autoencoder checkpoint not found: {self.cfg.defense_ae}")
            self.defense_ae = load_ae(self.cfg.defense_ae)

        if not self.cfg.dataset_path.exists():
            raise ConfigurationError(f"dataset not found: {self.cfg.dataset_path}")
        self.dataset = load_dataset(self.cfg.dataset_path, split="test")

    def samples(self, victim: str) -> List[Tuple[int, np.ndarray, int]]:
        """Seeded permutation of the test split, optionally restricted to samples the victim gets right"""
        if victim not in self._samples:
            order = np.random.default_rng(self.cfg.seed).permutation(len(self.dataset))
            if self.cfg.only_correct:
                predictions = predict(self.models[victim], self.dataset.clouds[order])
                order = order[predictions == self.dataset.labels[order]]
            chosen = order[:self.cfg.samples_per_cell]
            if len(chosen) == 0:
                raise ConfigurationError(f"no usable test samples for victim '{victim}'")
            self._samples[victim] = [(int(i), *self.dataset[int(i)]) for i in chosen]
        return self._samples[victim]

    def targets_for(self, cell: Cell, sample_index: int, label: int) -> List[Optional[int]]:
        if cell.attack.config.mode != "targeted":
            return [None]
        wrong = [k for k in range(self.dataset.n_classes) if k != label]
        if self.cfg.targets == "all":
            return wrong
        rng = np.random.default_rng(cell_seed(self.cfg.seed, cell.victim, "targets", 0.0, sample_index))
        picked = rng.choice(len(wrong), size=min(self.cfg.n_targets, len(wrong)), replace=False)
        return [wrong[i] for i in sorted(picked)]

    # Execution

    def run_cell(self, cell: Cell) -> List[ResultRecord]:
        """Attack every sample of the cell and evaluate on the whole roster"""
        victim = self.models[cell.victim]
        base = cell.attack.config.with_(epsilon=cell.epsilon) if cell.attack.config.is_hard else cell.attack.config
        evaluations = self.evaluations()
        defenses = {d.name: d for d in self.defenses}
        successes = {pair: 0 for pair in evaluations}
        linf, l2, chamfer_sym = [], [], []

        for index, cloud, label in self.samples(cell.victim):
            for target in self.targets_for(cell, index, label):
                seed = cell_seed(self.cfg.seed, cell.victim, cell.attack.name, cell.epsilon, index, target)
                cfg = base.with_(seed=seed, target=target)
                outcome = run_attack(victim, self.attack_ae, cloud, label, cfg)
                linf.append(outcome.norms.linf)
                l2.append(outcome.norms.l2)
                chamfer_sym.append(outcome.norms.chamfer_symmetric)

                for transfer, defense_name in evaluations:
                    if defense_name == NO_DEFENSE:
                        success = evaluate_attack(self.models[transfer], cloud, outcome, label, cfg.mode)
                    elif defenses[defense_name].config.kind == "adversarial_training":
                        success = evaluate_attack(self.hardened[transfer], cloud, outcome, label, cfg.mode)
                    else:
                        spec = defenses[defense_name].config

                        def transform(points, spec=spec, seed=seed):
                            return apply_defense(spec, points, self.defense_ae, seed=seed)

                        success = evaluate_attack(self.models[transfer], cloud, outcome, label, cfg.mode, transform)
                    successes[(transfer, defense_name)] += int(success)

        n_samples = len(linf)
        return [
            ResultRecord(
                attack=cell.attack.name,
                victim=cell.victim,
                transfer=transfer,
                defense=defense_name,
                norm_type=base.norm_type,
                epsilon=float(cell.epsilon),
                gamma=float(base.gamma),
                kappa=float(base.kappa),
                n_samples=n_samples,
                success_rate=successes[(transfer, defense_name)] / n_samples,
                mean_linf=float(np.mean(linf)),
                mean_l2=float(np.mean(l2)),
                mean_chamfer_sym=float(np.mean(chamfer_sym)),
                seed=self.cfg.seed,
            )
            for transfer, defense_name in evaluations
        ]

    async def run(self) -> List[ResultRecord]:
        cells = self.cells()
        pending = [cell for cell in cells if not self.store.has_all(self.expected_keys(cell))]
        structured_logger.log_experiment_event(
            "grid_started", cells=len(cells), pending=len(pending), workers=self.workers
        )
        if not pending:
            self.logger.info("All cells already present, nothing to run")
            return self.store.finalize(self.sort_key)

        torch.set_num_threads(settings.TORCH_THREADS)
        self.load()
        for cell in pending:
            # fill the per-victim sample cache before threads start
            self.samples(cell.victim)

        self.monitor.log("grid_start")
        semaphore = asyncio.Semaphore(self.workers)
        write_lock = asyncio.Lock()
        progress = tqdm(total=len(pending), desc="attack grid", leave=False,
                        disable=progress_disabled())
        started = time.perf_counter()

        async def process(cell: Cell) -> None:
            async with semaphore:
                try:
                    records = await asyncio.to_thread(self.run_cell, cell)
                except PCAdvError as e:
                    structured_logger.log_error(str(e), cell=cell.label)
                    raise
            async with write_lock:
                self.store.append(records)
                self.attacks_executed += records[0].n_samples
                self.monitor.cell_finished()
                progress.update(1)

        try:
            await asyncio.gather(*(process(cell) for cell in pending))
        finally:
            progress.close()

        self.monitor.log("grid_end")
        structured_logger.log_performance(
            "attack_grid",
            (time.perf_counter() - started) * 1000,
            cells=len(pending),
            attacks=self.attacks_executed,
            workers=self.workers,
        )
        return self.store.finalize(self.sort_key)


def run_attack_grid(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[ResultRecord]:
    """Run (or resume) the grid described by cfg; returns all records in canonical order"""
    return asyncio.run(GridRunner(cfg, workers).run())
