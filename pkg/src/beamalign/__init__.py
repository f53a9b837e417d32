"""Time-domain beam alignment for hybrid-MIMO mmWave links.

Core pipeline: synthesize a multipath time-varying channel, probe it with
PN sequences through pseudo-random finger beams, accumulate matched-filter
energies into a non-negative linear system, and recover the angle-domain
power spread function by non-negative least squares.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelRealization,
    ClusterParams,
    PathParams,
    SystemConfig,
    angle_grid,
    array_response,
    beamspace_transform,
    dft_matrix,
    draw_fading,
    realize_channel,
)
from .config import ExperimentSpec, config_hash, load_config, resolve
from .estimator import (
    BeamSelection,
    MPlusReport,
    OmpResult,
    PsfEstimate,
    m_plus_check,
    nnls_solve,
    omp_baseline,
    select_beam,
)
from .harness import (
    ExperimentResult,
    run_detection_sweep,
    run_experiment,
    run_pdp_experiment,
    run_rate_experiment,
    run_trial,
    wilson_interval,
    write_outputs,
)
from .metrics import PdpProfile, RateBounds, SnrReport, calibrate_power, pdp, rate_bounds, snr_bbf
from .receiver import (
    MeasurementBatch,
    ProbeResult,
    accumulate_energy,
    assemble_measurements,
    collect_probe,
    ground_truth_gamma,
    matched_filter,
)
from .signaling import (
    BeamCodebook,
    PnSet,
    PowerConfig,
    SignalConfig,
    beamforming_vector,
    gen_codebook,
    gen_pn,
    simulate_rx_samples,
)

__all__ = [name for name in dir() if not name.startswith("_")]
