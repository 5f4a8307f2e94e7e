"""
Experiment configuration files

INI layout:
    [experiment]        seed, output_dir, samples_per_cell, targets, n_targets, only_correct, workers
    [dataset]           path
    [autoencoder]       attack, defense
    [model.<name>]      checkpoint, hardened_checkpoint
    [attack.<name>]     preset, epsilons and any AttackConfig field
    [defense.<name>]    kind and any DefenseConfig field
"""
import configparser
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..attacks.config import AttackConfig, preset
from ..config.settings import settings
from ..defenses.config import DefenseConfig
from ..utils.errors import ConfigurationError
from ..utils.validators import BudgetValidator

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = {
    "linf": (0.01, 0.04, 0.05, 0.1, 0.18, 0.28, 0.35, 0.45, 0.6, 0.75),
    "l2": (0.1, 0.22, 0.48, 0.72, 1.0, 1.5, 1.8, 2.8, 4.0, 7.0),
}
TARGET_POLICIES = ("all", "k-random")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    checkpoint: Path
    hardened_checkpoint: Optional[Path] = None


@dataclass(frozen=True)
class AttackSpec:
    name: str
    config: AttackConfig
    epsilons: Tuple[float, ...]


@dataclass(frozen=True)
class DefenseSpec:
    name: str
    config: DefenseConfig


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a grid run needs"""
    dataset_path: Path
    models: Tuple[ModelSpec, ...]
    attacks: Tuple[AttackSpec, ...]
    defenses: Tuple[DefenseSpec, ...] = ()
    attack_ae: Optional[Path] = None
    defense_ae: Optional[Path] = None
    samples_per_cell: int = 100
    seed: int = 0
    output_dir: Path = field(default_factory=lambda: Path(settings.OUTPUT_DIR))
    targets: str = "k-random"
    n_targets: int = 3
    only_correct: bool = True
    workers: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for kind, names in (
            ("model", [m.name for m in self.models]),
            ("attack", [a.name for a in self.attacks]),
            ("defense", [d.name for d in self.defenses]),
        ):
            if len(set(names)) != len(names):
                raise ConfigurationError(f"{kind} names must be unique, got {names}")
            if "none" in names:
                raise ConfigurationError(f"'none' is reserved and cannot name a {kind}")

        if not self.models:
            raise ConfigurationError("experiment needs at least one model")
        for spec in self.attacks:
            is_valid, error_msg = BudgetValidator.validate_grid(spec.epsilons)
            if not is_valid:
                raise ConfigurationError(f"attack '{spec.name}': {error_msg}")
            if not spec.epsilons:
                raise ConfigurationError(f"attack '{spec.name}' has an empty epsilon grid")
        if self.samples_per_cell < 1:
            raise ConfigurationError(f"samples_per_cell must be >= 1, got {self.samples_per_cell}")
        if self.targets not in TARGET_POLICIES:
            raise ConfigurationError(f"targets must be one of {TARGET_POLICIES}, got '{self.targets}'")
        if self.n_targets < 1:
            raise ConfigurationError(f"n_targets must be >= 1, got {self.n_targets}")

    def model(self, name: str) -> ModelSpec:
        for spec in self.models:
            if spec.name == name:
                return spec
        raise ConfigurationError(f"unknown model '{name}'")

    def with_gamma(self, gamma: float, output_dir: Optional[Path] = None) -> "ExperimentConfig":
        """Same grid with every attack's gamma replaced"""
        attacks = tuple(replace(a, config=a.config.with_(gamma=gamma)) for a in self.attacks)
        return replace(self, attacks=attacks, output_dir=output_dir or self.output_dir)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise ConfigurationError(f"cannot read experiment config {path}")
        return cls.from_parser(parser, base_dir=path.parent)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, base_dir: Path = Path(".")) -> "ExperimentConfig":
        def resolve(value: Optional[str]) -> Optional[Path]:
            if not value:
                return None
            candidate = Path(value)
            return candidate if candidate.is_absolute() else base_dir / candidate

        try:
            experiment = parser["experiment"] if parser.has_section("experiment") else {}
            if not parser.has_option("dataset", "path"):
                raise ConfigurationError("[dataset] path is required")

            models = tuple(
                ModelSpec(
                    name=section.split(".", 1)[1],
                    checkpoint=resolve(parser.get(section, "checkpoint")),
                    hardened_checkpoint=resolve(parser.get(section, "hardened_checkpoint", fallback=None)),
                )
                for section in parser.sections() if section.startswith("model.")
            )
            attacks = tuple(
                _attack_spec(section.split(".", 1)[1], dict(parser.items(section)))
                for section in parser.sections() if section.startswith("attack.")
            )
            defenses = tuple(
                DefenseSpec(section.split(".", 1)[1], _defense_config(section.split(".", 1)[1], dict(parser.items(section))))
                for section in parser.sections() if section.startswith("defense.")
            )

            return cls(
                dataset_path=resolve(parser.get("dataset", "path")),
                models=models,
                attacks=attacks,
                defenses=defenses,
                attack_ae=resolve(parser.get("autoencoder", "attack", fallback=None)),
                defense_ae=resolve(parser.get("autoencoder", "defense", fallback=None)),
                samples_per_cell=int(experiment.get("samples_per_cell", 100)),
                seed=int(experiment.get("seed", settings.DEFAULT_SEED)),
                output_dir=resolve(experiment.get("output_dir")) or Path(settings.OUTPUT_DIR),
                targets=experiment.get("targets", "k-random"),
                n_targets=int(experiment.get("n_targets", 3)),
                only_correct=str(experiment.get("only_correct", "true")).lower() in ("1", "true", "yes", "on"),
                workers=int(experiment.get("workers", 0)),
            )
        except (configparser.Error, ValueError) as e:
            raise ConfigurationError(f"invalid experiment config: {e}") from e


def _coerce(kind: Any, raw: str) -> Any:
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is str:
        return raw.strip()
    if raw.strip().lower() in ("", "none"):
        return None
    # Optional[int] target label
    return int(raw) if raw.strip().lstrip("-").isdigit() else raw.strip()


def _attack_spec(name: str, options: Dict[str, str]) -> AttackSpec:
    base = preset(options.pop("preset", "advpc"))
    raw_epsilons = options.pop("epsilons", None)

    types = {f.name: f.type for f in fields(AttackConfig)}
    overrides = {}
    for key, raw in options.items():
        if key not in types:
            raise ConfigurationError(f"attack '{name}': unknown option '{key}'")
        overrides[key] = _coerce(types[key], raw)
    config = base.with_(**overrides)

    if not config.is_hard:
        epsilons: Tuple[float, ...] = (0.0,)
    elif raw_epsilons:
        epsilons = tuple(float(value) for value in raw_epsilons.split(","))
    else:
        epsilons = DEFAULT_EPSILONS[config.constraint]
    return AttackSpec(name, config, epsilons)


def _defense_config(name: str, options: Dict[str, str]) -> DefenseConfig:
    types = {f.name: f.type for f in fields(DefenseConfig)}
    values = {"kind": options.pop("kind", name)}
    for key, raw in options.items():
        if key not in types:
            raise ConfigurationError(f"defense '{name}': unknown option '{key}'")
        values[key] = _coerce(types[key], raw)
    return DefenseConfig(**values)
