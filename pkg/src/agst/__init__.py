"""Graph semi-supervised learning via augmented self-training.

A label-propagation teacher generates soft pseudo-labels, an MLP student
learns the feature-to-label map under a joint cross-entropy + prototype
contrastive objective, and the student's predictions rewire the graph
between self-training rounds.
"""

from .data import (
    UNLABELED,
    DatasetBundle,
    DatasetFormatError,
    SplitSpec,
    convert_content_release,
    l2_normalize_rows,
    load_dataset,
    make_split,
    ring_clusters_bundle,
    save_dataset,
    two_cluster_bundle,
)
from .experiments import (
    ExperimentSpec,
    Report,
    SweepRow,
    confidence_halfwidth,
    method_config,
    run_experiment,
    run_single,
    run_sweep,
    write_sweep_csv,
)
from .gradcheck import GradCheckReport, grad_check, run_gradcheck_suite
from .graph import NormalizedOperator, SparseGraph, normalize_adjacency, spmm
from .mlp import (
    Adam,
    PseudoLabelSet,
    StudentParams,
    TrainConfig,
    TrainTrace,
    compute_prototypes,
    filter_pseudo_labels,
    forward,
    init_params,
    loss_ce_labeled,
    loss_ce_unlabeled,
    loss_contrastive,
    momentum_embed,
    momentum_update,
    similarity_distribution,
    train_student,
    write_trace_csv,
)
from .propagation import (
    LpConfig,
    SoftLabels,
    closed_form_oracle,
    initial_label_matrix,
    propagate_labels,
    to_distribution,
)
from .rewiring import (
    AugmentConfig,
    AugmentationPlan,
    augment_topology,
    edge_probability,
    generate_candidates,
    hard_labels,
    plan_augmentation,
    sigmoid,
    write_plan_tsv,
)
from .selftrain import AgstConfig, IterationStats, RunResult, predict, result_to_dict, run_agst

__version__ = "0.1.0"
