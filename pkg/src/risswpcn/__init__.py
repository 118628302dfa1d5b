"""Sensing-then-reflecting surface-assisted WPCN: simulation and closed-form
performance analytics, verified against Monte Carlo at desk scale."""

__version__ = "0.1.0"

from .analytics import (
    DoaErrorModel,
    energy_bounds,
    expected_energy_doa_error,
    expected_energy_perfect,
    expected_energy_phase_error,
    gaussian_dirichlet_sum,
    gaussian_dirichlet_sum4,
    miso_siso_ratio,
    se_upper_bound,
)
from .arrays import (
    AngleSet,
    ArrayGeometry,
    ChannelRealization,
    PathLossModel,
    SpatialPhases,
    SystemParams,
    angles_to_phases,
    path_loss_linear,
    steering_ula,
    steering_upa,
    substream,
    synth_rician,
)
from .beamforming import (
    Precoder,
    RissPhaseConfig,
    fullcsi_alternating_opt,
    mrc_combiner,
    mrt_precoder,
    received_energy_instant,
    riss_phase_design,
    uplink_snr_instant,
)
from .doa import (
    ErrorStats,
    SnapshotSet,
    collect_error_stats,
    estimate_doa_2d,
    fit_eta,
    root_music_arm,
    synth_snapshots,
)
from .gammadist import (
    GammaParams,
    ergodic_se,
    gamma_cdf,
    gamma_icdf,
    gamma_params_doa,
    gamma_params_perfect,
    ks_distance,
    required_transmit_power,
)
from .montecarlo import (
    DriftModel,
    HarvestModel,
    McConfig,
    apply_pilot_overhead,
    mc_energy,
    mc_ergodic_se,
    mc_outage,
    nonlinear_harvest,
    simulate_frames,
)
