"""Bosonic learning machine simulator for trapped-ion motional modes."""

from .fock import (
    MotionalState,
    StateSpec,
    TruncationError,
    amplitude_encode,
    coherent_state,
    combine_states,
    displaced_state,
    fock_state,
    fock_superposition,
    free_evolve,
    hs_distance,
    overlap_exact,
    squeezed_vacuum,
    wigner_grid,
)
from .pulses import (
    BeamSplitterSpec,
    CompositeState,
    Pulse,
    TrapConfig,
    apply_blue_sideband,
    apply_carrier,
    apply_cbs,
    apply_red_sideband,
    apply_stark,
)
from .swap import (
    OverlapEstimate,
    delay_scan,
    make_overlap_fn,
    overlap_matrix,
    swap_test_exact,
    swap_test_sampled,
)
from .synthesis import (
    FidelityReport,
    PulseSchedule,
    compensate_stark,
    simulate_schedule,
    synthesize,
    verify_schedule,
)
from .ml import (
    ClusteringStep,
    Dataset,
    DataState,
    KnnResult,
    default_dataset,
    default_knn_trials,
    final_partition,
    kmeans,
    knn_classify,
)
from .characterize import (
    PopulationFit,
    SidebandSignal,
    fit_populations,
    ramsey_stark_scan,
    sample_signal,
    sideband_signal,
)

__version__ = "0.1.0"
