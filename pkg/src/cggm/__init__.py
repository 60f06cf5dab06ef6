"""Cluster-based Gaussian graphical models: clustering, one-step inference, FDR-controlled recovery."""

__version__ = "0.1.0"

from .model import LatentModel, Partition, SampleMatrix, build_model, cluster_averages, sample  # noqa: E402
from .graphs import gen_band, gen_hub, gen_scale_free, ground_truth, precision_from_adjacency  # noqa: E402
from .clustering import align_partition, cluster, cod_cluster, cod_metric, sample_covariance  # noqa: E402
from .covariance import averages_covariance, gamma_hat, latent_covariance, per_sample_latent  # noqa: E402
from .inference import EdgeInference, clime_column, infer_graph, nuisance_projection, one_step_edge  # noqa: E402
from .fdr import bh_cutoff, by_cutoff, phi_inv, score  # noqa: E402
