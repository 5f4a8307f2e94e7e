"""
Geometry package: point-set metrics, projections and neighbor queries
"""

from .metrics import EMD_EXACT_CAP, chamfer, emd, emd_matching, hausdorff, norm_l2, norm_linf
from .neighbors import knn_indices, knn_mean_distances
from .projections import project_l2, project_linf

__all__ = [
    'EMD_EXACT_CAP', 'chamfer', 'emd', 'emd_matching', 'hausdorff', 'norm_l2', 'norm_linf',
    'knn_indices', 'knn_mean_distances', 'project_l2', 'project_linf',
]
