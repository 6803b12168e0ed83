"""Stacked-metasurface wave-domain combiner: diffraction channel synthesis,
layer-wise phase training, and link-level multi-user / anti-jamming
experiments."""

__version__ = "0.1.0"

from .channels import (
    ChannelSet,
    build_channel_set,
    correlation_matrix,
    correlation_sqrt,
    inter_layer_matrix,
    jammer_channel,
    load_channel_set,
    rs_coefficient,
    rs_matrix,
    save_channel_set,
    sim_to_bs_matrix,
    steering_vector,
    user_channel,
)
from .config import (
    ConfigError,
    apply_overrides,
    config_hash,
    default_config,
    load_config,
    scenario_from_config,
)
from .core import (
    AntennaAssignment,
    EquivalentChannel,
    PhaseBook,
    assign_antennas,
    cumulative_layer_channels,
    diagonality_metrics,
    equivalent_channel,
    forward,
    load_phase_book,
    save_phase_book,
    wrap_phases,
)
from .experiments import (
    ExperimentReport,
    GeometryParams,
    JammingParams,
    RealizationResult,
    Scenario,
    UserParams,
    distance_robustness,
    monte_carlo_aggregate,
    run_impairment_study,
    run_jamming,
    run_multiuser,
    run_sweep,
    scenario_geometry,
)
from .geometry import SimGeometry, UserLayout, build_geometry, draw_user_layout
from .impairments import (
    ImpairmentConfig,
    apply_phase_impairments,
    coupling_matrix,
    impairment_coupling,
    kappa_for_circular_std,
    quantize_phases,
    von_mises_phase_noise,
)
from .report import write_report, write_sweep_report
from .seeding import derive_seed, rng_from
from .signals import (
    JammerWaveform,
    SymbolFrame,
    awgn,
    constellation_mse,
    gen_frame,
    jammer_waveform,
    normalize_received,
    qpsk_demodulate,
    qpsk_modulate,
    ser,
    sinr_and_sumrate,
    snr_to_noise_variance,
)
from .training import (
    TrainConfig,
    TrainRecord,
    batch_loss,
    complexity_probe,
    episode_benchmark,
    layer_gradient,
    loss,
    lr_schedule,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
