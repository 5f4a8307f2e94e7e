"""
Synthetic shape dataset package
"""

from .shapes import SHAPE_NAMES, generate_shape, normalize, sample_surface
from .storage import LabeledDataset, build_dataset, load_dataset, save_dataset

__all__ = [
    'SHAPE_NAMES', 'generate_shape', 'normalize', 'sample_surface',
    'LabeledDataset', 'build_dataset', 'load_dataset', 'save_dataset',
]
