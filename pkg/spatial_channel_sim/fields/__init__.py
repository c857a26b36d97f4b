from .bank import MAX_CLUSTER_FIELDS, FieldBank, FieldId
from .lattice import STREAM_CHANNEL, cell_sample, sample, seed_sequence, to_uniform, vertex_gaussians
from .path import exp_correlation, sample_ou_path

# Point fields (lattice): bilinear interpolation of hashed vertex Gaussians,
#   used for grid-constant large-scale parameters.
# Path fields: first-order exponential filter with exact exp(-d/d_corr)
#   correlation, used for along-route shadow fading and LOS draws.

__all__ = [
    "STREAM_CHANNEL",
    "MAX_CLUSTER_FIELDS",
    "FieldBank",
    "FieldId",
    "cell_sample",
    "sample",
    "seed_sequence",
    "to_uniform",
    "vertex_gaussians",
    "exp_correlation",
    "sample_ou_path",
]
