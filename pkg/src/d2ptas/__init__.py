"""D^2-sampling PTAS for k-means with an exact oracle and statistical harness."""
from .errors import D2PtasError, DatasetParseError, RefusalError, UsageError
from .measure import SQ_EUCLIDEAN, MeasureSpec, centroid, cost, sq_euclidean
from .oracle import enumerate_partitions, optimal_kmeans
from .ptas import (
    PtasParams,
    SolveResult,
    find_k_means,
    practical_params,
    subset_by_rank,
    theoretical_params,
    theoretical_ptas_params,
)

__version__ = "0.1.0"
