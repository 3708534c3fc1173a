"""Mean partitions, quotient metrics and jury-theorem experiments for consensus clustering."""

__version__ = "0.1.0"

from .alignment import (
    MultipleAlignment,
    align_sample_to,
    alignment_cost,
    enumerate_alignments,
    exact_optimal_alignment,
)
from .diversity import (
    DiversityReport,
    LossReport,
    certify_homogeneous,
    diversity_report,
    loss,
    loss_decomposition,
    pairwise_diversity,
    variation,
)
from .errors import PartitionError
from .frechet import MeanResult, Sample, frechet, mean_exact, mean_heuristic, mean_set
from .jury import (
    GroundTruth,
    VoteOutcome,
    agreement,
    binomial_majority_prob,
    condorcet_limit,
    majority_vote,
    vote,
)
from .partition import (
    AlignmentResult,
    LabeledPartition,
    Partition,
    canonicalize,
    degree_of_asymmetry,
    delta,
    in_asymmetry_ball,
    in_dirichlet_domain,
    optimal_position,
)
from .simulation import (
    EnsembleModel,
    ExperimentReport,
    estimate_vote_probability,
    run_convergence_experiment,
    sample_partition,
)
