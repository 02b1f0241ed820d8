"""Link-level Monte Carlo simulator for large-array millimeter-wave downlinks.

The package is organized as a pipeline:

``channel``      clustered multipath generation for uniform linear arrays;
``beamforming``  digital (SVD), hybrid (constant-modulus factorized) and
                 analog (beam-steered) precoder/postcoder construction;
``metrics``      spectral efficiency and energy efficiency;
``scenario``     multi-user drop configuration, drawing and evaluation;
``harness``      seeded deterministic parameter sweeps, CSV and SVG output;
``cli``          the ``mmwsim`` command-line entry point.
"""

from .beamforming import (
    BeamformerPair,
    HybridFactors,
    InsufficientSeparablePathsError,
    analog_beam_steer,
    digital_svd_pair,
    hybrid_decompose,
    hybrid_pair,
)
from .channel import (
    ArrayGeometry,
    ChannelParams,
    ChannelRealization,
    LosDescriptor,
    LosProbabilityModel,
    PathComponent,
    PathLossModel,
    PathSet,
    assemble_channel,
    draw_path_set,
    path_loss,
    steering_vector,
)
from .harness import (
    ResultRecord,
    SweepSpec,
    derive_seed,
    emit_plot,
    read_csv,
    run_sweep,
    splitmix64,
    write_csv,
)
from .metrics import MetricsResult, PowerModel, ase, asee, disturbance_covariance
from .scenario import (
    HybridParams,
    ScenarioConfig,
    ScenarioRealization,
    draw_scenario,
    evaluate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # channel
    "ArrayGeometry",
    "ChannelParams",
    "ChannelRealization",
    "LosDescriptor",
    "LosProbabilityModel",
    "PathComponent",
    "PathLossModel",
    "PathSet",
    "assemble_channel",
    "draw_path_set",
    "path_loss",
    "steering_vector",
    # beamforming
    "BeamformerPair",
    "HybridFactors",
    "InsufficientSeparablePathsError",
    "analog_beam_steer",
    "digital_svd_pair",
    "hybrid_decompose",
    "hybrid_pair",
    # metrics
    "MetricsResult",
    "PowerModel",
    "ase",
    "asee",
    "disturbance_covariance",
    # scenario
    "HybridParams",
    "ScenarioConfig",
    "ScenarioRealization",
    "draw_scenario",
    "evaluate_scenario",
    # harness
    "ResultRecord",
    "SweepSpec",
    "derive_seed",
    "emit_plot",
    "read_csv",
    "run_sweep",
    "splitmix64",
    "write_csv",
]
