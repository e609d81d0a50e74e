"""Explicit eigenfunction features for kernel adaptive filtering.

Gram-matrix eigenmaps give a finite-dimensional feature space in which
linear adaptive filters (LMS, RLS) approximate their kernel counterparts.
The eigenmaps can be grown one point at a time with rank-1 eigenvalue
updates, with the filter weights carried across each change of basis.
"""

from speedkaf.errors import NumericalError
from speedkaf.features import (
    FeatureKind,
    FeatureMapSpec,
    GQMap,
    LinearMap,
    RFF1Map,
    RFF2Map,
    TaylorMap,
    feature_map,
)
from speedkaf.filters import ExRLSFilter, KLMSFilter, LMSFilter, QKLMSFilter, RLSFilter
from speedkaf.ispeed import (
    NoveltyGate,
    SpeedState,
    TransferMode,
    flush_pending,
    ispeed_step,
    right_inverse,
    sispeed_step,
    sparsify,
    transfer_weights,
    weight_preimage,
)
from speedkaf.kernels import (
    GramMatrix,
    KernelConfig,
    KernelFamily,
    cross_kernel,
    gram_matrix,
    kernel_eval,
    kernel_vector,
)
from speedkaf.rank1 import (
    grow_eigensystem,
    interlacing_violations,
    rank1_update,
    reorthonormalize,
    secular_roots,
    update_eigenvectors,
)
from speedkaf.spectral import (
    EigenSystem,
    Eigenmap,
    build_eigenmap,
    decompose,
    embed,
    fit_eigenmap,
    frobenius_error,
    reconstruct_gram,
    subspace_distance,
    usable_rank,
)
from speedkaf.timeseries import (
    MackeyGlassConfig,
    RegressionDataset,
    add_noise,
    embed_series,
    generate_mg,
    make_dataset,
    standardize,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
