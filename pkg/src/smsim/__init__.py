"""Link-level simulator and analytical evaluator for SM versus SMX MIMO."""

from .analysis import (
    ComplexityReport,
    PepTerm,
    complexity_report,
    pep_chernoff,
    pep_exact,
    pep_term,
    union_bound_aber,
)
from .channel import (
    ChannelMatrix,
    CorrelationSpec,
    NoisySnapshot,
    apply_awgn,
    draw_iid_rayleigh,
    draw_kronecker_channel,
    exponential_correlation,
    hermitian_sqrt,
)
from .detect import (
    DetectionResult,
    SearchSpaceError,
    count_bit_errors,
    detect_sm_ml,
    detect_smx_ml,
)
from .engine import (
    AberCurve,
    AberPoint,
    ChannelSource,
    ComparisonReport,
    SimulationConfig,
    compare_sm_smx,
    emit_csv,
    read_csv,
    run_bound,
    run_monte_carlo,
    snr_at_aber,
)
from .measurements import (
    MeasurementSet,
    RayleighFitReport,
    VirtualArray,
    build_virtual_array,
    chi_squared_rayleigh_gof,
    estimate_correlation_matrices,
    fit_exponential_decay,
    load_measurement_file,
    select_channels,
    synthesize_measurement_file,
    write_measurement_file,
)
from .modem import (
    QamConstellation,
    SmFrame,
    SmxFrame,
    demap_sm_frame,
    demap_smx_frame,
    gray_qam,
    map_bits_sm,
    map_bits_smx,
)

__version__ = "0.1.0"
