"""Average-consensus simulation over networks with additive low-rank
interference, with information-alignment protocols that recover the projected
average."""

__version__ = "0.1.0"

from .alignment import (  # noqa: F401
    PostConditioner,
    Preconditioner,
    SignalSubspace,
    build_blanket,
    build_postconditioner,
    build_preconditioner,
    make_signal_subspace,
)
from .engine import (  # noqa: F401
    RunControls,
    RunResult,
    RunSetup,
    Trajectory,
    detect_convergence,
    error_orthogonality,
    oracle_projected_average,
    run_conservative,
    run_incoming,
    run_naive,
    run_outgoing,
    run_uniform_aligned,
)
from .interference import (  # noqa: F401
    InterferenceModel,
    random_interference_graph,
    random_low_rank,
    received_message,
)
from .numerics import (  # noqa: F401
    Subspace,
    Svd,
    kron,
    null_space,
    projection_matrix,
    pseudo_inverse,
    rank_with_tol,
    subspace_equal,
    svd,
)
from .scenario import Scenario, build_artifacts, load_scenario  # noqa: F401
from .topology import (  # noqa: F401
    Graph,
    WeightMatrix,
    build_graph,
    metropolis_weights,
    verify_consensus_conditions,
)
