"""Subspace-alignment strategies for secure multi-user relay communication.

Library layout:
  subspace     tolerance-aware complex subspace arithmetic
  feasibility  feasible tuples, strategy construction / sampling / verification
  variety      Plucker coordinates and probes of the degenerate locus
  relaysim     channels, encoders, decoding, SER and equivocation experiments
  cli          reproducible command-line front end
"""

from .errors import (
    DimensionMismatch,
    InconsistentPairwise,
    InfeasibleTuple,
    InvalidInput,
    RelayAlignError,
    ResampleExhausted,
    SecrecyViolation,
    SingularChannel,
    StrategyInvalid,
)
from .feasibility import (
    Strategy,
    StrategySpec,
    VerificationReport,
    construct_strategy,
    feasible_variety_dim,
    generic_feasibility_rate,
    is_feasible_tuple,
    paired_pairwise_table,
    sample_generic_strategy,
    strategy_from_pairwise,
    symmetric_pairwise_table,
    verify_strategy,
)
from .relaysim import (
    ChannelSet,
    Constellation,
    NoiseModel,
    SimReport,
    design_encoders,
    draw_channels,
    receiver_decode,
    relay_map_success,
    relay_observe,
    run_monte_carlo,
    secrecy_audit,
    snr,
    two_user_baseline,
)
from .subspace import (
    Subspace,
    Tolerance,
    intersect,
    is_direct_sum,
    orthonormal_basis,
    project_onto_perp,
    subspace_sum,
)
from .variety import (
    PluckerPoint,
    check_plucker_relations,
    codim_line_probe,
    determinantal_test,
    plucker,
    triple_intersection_dim,
)

__version__ = "0.1.0"
