"""
DTW distances, DBA barycenters and time-series K-means
"""

from .dba import Barycenter, dba_average, dba_inertia, dba_medoid, member_matrix
from .dtw import (
    DtwParams,
    WarpingPath,
    dtw_distance,
    dtw_matrix,
    dtw_path,
    dtw_paths_to_many,
    dtw_to_many,
    path_cost,
)
from .kmeans import (
    ClusterModel,
    cluster_scores,
    cluster_sizes,
    fit,
    predict_cluster,
    self_distances,
)

__all__ = [
    "Barycenter",
    "ClusterModel",
    "DtwParams",
    "WarpingPath",
    "cluster_scores",
    "cluster_sizes",
    "dba_average",
    "dba_inertia",
    "dba_medoid",
    "dtw_distance",
    "dtw_matrix",
    "dtw_path",
    "dtw_paths_to_many",
    "dtw_to_many",
    "fit",
    "member_matrix",
    "path_cost",
    "predict_cluster",
    "self_distances",
]
