"""Chordal and arrow decompositions of PSD matrix inequalities.

The package builds minimum-compliance topology-optimization SDPs from 2D
finite-element meshes in original and decomposed forms, verifies the
decompositions against independent oracles, solves the problems with a
block-structured interior-point method, and benchmarks the decomposition
speed-up.
"""

from .symmat import SymMat, is_psd, read_matrix_market, restrict, write_matrix_market
from .graphs import (
    CliqueSet,
    SparsityGraph,
    chordal_extension,
    is_chordal,
    maximal_cliques,
    mcs_order,
    read_edge_list,
    sparsity_graph,
    write_edge_list,
)
from .partition import AssumptionError, Partition
from .decompose import (
    ArrowPart,
    ArrowSplit,
    ArrowSystem,
    ChordalSplit,
    ConditioningError,
    DecompositionError,
    arrow_decompose,
    chordal_decompose,
    embedded_blocks,
    embedded_decompose,
    load_arrow_system,
    save_arrow_system,
    verify_split,
)
from .fem import (
    FemConfig,
    FemError,
    FemModel,
    SubdomainPlan,
    assemble,
    build_model,
    element_stiffness,
    load_config,
    partition,
    save_config,
    subdomain_loads,
    subdomain_stiffness,
)
from .sdp import (
    CountReport,
    SdoProblem,
    SdpError,
    arrow_feasible_point,
    build_arrow,
    build_chordal,
    build_fictitious,
    build_original,
    count_report,
    coupling_pairs,
    export_sdpa,
    global_affine,
    import_sdpa,
)
from .solver import (
    DualPoint,
    KktReport,
    SolveOptions,
    SolveReport,
    kkt_residuals,
    solve,
)

__version__ = "0.1.0"
