"""
Experiment harness package
"""

from .analysis import (
    AEQuality,
    TransferMatrix,
    ae_quality,
    clean_accuracies,
    defense_table,
    gamma_ablation,
    loss_ablation,
    loss_ablation_from_config,
    sensitivity_curves,
    transfer_matrix,
)
from .config import ExperimentConfig
from .grid import GridRunner, cell_seed, run_attack_grid
from .plots import emit_results
from .records import COLUMNS, ResultRecord, read_records, write_records

__all__ = [
    'AEQuality', 'TransferMatrix', 'ae_quality', 'clean_accuracies', 'defense_table', 'gamma_ablation',
    'loss_ablation', 'loss_ablation_from_config', 'sensitivity_curves', 'transfer_matrix',
    'ExperimentConfig', 'GridRunner', 'cell_seed', 'run_attack_grid', 'emit_results',
    'COLUMNS', 'ResultRecord', 'read_records', 'write_records',
]
