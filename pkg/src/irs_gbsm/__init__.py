"""Non-stationary geometry-based stochastic channel model for IRS-assisted MIMO."""

from .assembly import EndToEndChannel, apply_steering, cascade, phase_model_for
from .clusters import (
    ClusterPair,
    ClusterRealization,
    VisibilityTensor,
    advance_clusters,
    evolve_visibility,
    generate_cluster_pairs,
    realize_subchannel,
)
from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .geometry import (
    RotationAngles,
    SceneGeometry,
    TerminalLayout,
    element_offset,
    flatten_index,
    gcs_to_lcs,
    lcs_to_gcs,
    rotation_matrix,
    unflatten_index,
)
from .irs import (
    IrsPhaseModel,
    PhasePlan,
    SteeringVector,
    cascaded_path_loss,
    optimal_phase,
    quantize_phase,
    received_power,
    steering_vector,
)
from .largescale import LargeScaleParams, path_loss_bu_db, sample_shadow_fading
from .rng import rng_stream
from .smallscale import (
    RayTap,
    SubchannelCIR,
    compose_cir,
    los_delay,
    nlos_cir,
    subchannel_cir,
    transfer_function,
    transfer_values,
)
from .stats import (
    CorrelationCurve,
    acf_analytical_subchannel,
    acf_full_irs,
    acf_single_irs_element,
    acf_subchannel,
    ccf_spatial,
    doppler_frequency,
    ds_cdf,
    local_doppler_spread,
    rms_delay_spread,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
