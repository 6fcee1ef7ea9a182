"""qramc: sparse simulation of random-access quantum circuits, with a
compressed execution mode that stores the memory register as a superposed
radix tree over a prefix-sum block allocator."""

from .circuit import (
    CircuitError,
    GateSpec,
    QramCircuit,
    Rag,
    Read,
    parse_circuit,
    serialize_circuit,
    validate_qram,
)
from .state import (
    SimulationError,
    SparseState,
    SparsityReport,
    apply_gate,
    apply_rag,
    apply_read,
    fidelity,
    measure_distribution,
    run,
    tv_distance,
)
from .prefix_tree import (
    AllocRegion,
    PrefixError,
    PrefixSumTree,
    RankSuperposition,
    allocate_block,
    decode_subset,
    encode_subset,
    free_block,
    superpose_ranks,
)
from .radix_tree import (
    RadixError,
    RadixNode,
    count_layouts,
    decode_layout,
    dump_tree,
    encode_with_layout,
    enumerate_layouts,
    from_set,
    to_set,
)
from .qradix import (
    OpCounters,
    QrtCapacityError,
    QrtError,
    QrtRegion,
    controlled,
    lookup,
    prepare_canonical,
    swap,
    toggle,
)
from .compress import (
    CompressedRun,
    CompressionError,
    EquivalenceReport,
    SparsityError,
    compress_run,
    equivalence_check,
    map_direct_to_compressed,
    random_sparse_circuit,
)
from .app_trees import (
    AppTreeError,
    CpTree,
    KedTree,
    grid_id,
    neighbours,
    sparsity_count,
)

__all__ = [name for name in dir() if not name.startswith("_")]
