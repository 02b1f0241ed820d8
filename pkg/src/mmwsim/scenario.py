"""Multi-user downlink scenario: configuration, drawing, evaluation.

One base station with a large transmit array serves ``n_users`` terminals,
each receiving ``n_streams`` spatial streams.  Drawing a scenario places
the users (fixed or uniformly random distance), draws one multipath set
per user, assembles the channels, and builds per-user beamformers under
the configured scheme.  Evaluation turns a realization into spectral and
energy efficiency numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .beamforming import (
    DEFAULT_MIN_SEPARATION,
    SCHEMES,
    BeamformerPair,
    InsufficientSeparablePathsError,
    analog_beam_steer,
    digital_svd_pair,
    hybrid_pair,
    ranked_paths,
)
from .channel import (
    REFERENCE_DISTANCE_M,
    ArrayGeometry,
    ChannelParams,
    ChannelRealization,
    assemble_channel,
    draw_path_set,
)
from .metrics import MetricsResult, PowerModel, ase, asee

__all__ = [
    "HybridParams",
    "ScenarioConfig",
    "ScenarioRealization",
    "draw_scenario",
    "evaluate_scenario",
]


@dataclass
class HybridParams:
    """Hybrid-scheme knobs.  Chain counts of ``None`` resolve to the
    defaults: ``n_users * n_streams`` at the base station and ``n_streams``
    at each terminal."""

    n_rf_tx: int | None = None
    n_rf_rx: int | None = None
    tol: float = 1e-6
    max_iter: int = 200

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n_rf_tx is not None and self.n_rf_tx < 1:
            raise ValueError(f"n_rf_tx must be >= 1, got {self.n_rf_tx}")
        if self.n_rf_rx is not None and self.n_rf_rx < 1:
            raise ValueError(f"n_rf_rx must be >= 1, got {self.n_rf_rx}")
        if not (math.isfinite(self.tol) and self.tol > 0.0):
            raise ValueError(f"tol must be finite and > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class ScenarioConfig:
    """Complete description of one simulated drop."""

    n_users: int = 1
    n_streams: int = 1
    tx_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(64))
    rx_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry(16))
    channel_params: ChannelParams = field(default_factory=ChannelParams)
    power: PowerModel = field(default_factory=PowerModel)
    scheme: str = "digital"
    hybrid_params: HybridParams = field(default_factory=HybridParams)
    min_separation: float = DEFAULT_MIN_SEPARATION
    distance_range: tuple[float, float] = (10.0, 100.0)
    fixed_distance: float | None = None

    def __post_init__(self) -> None:
        if isinstance(self.distance_range, list):
            self.distance_range = tuple(self.distance_range)
        self.validate()

    def validate(self) -> None:
        self.tx_geometry.validate()
        self.rx_geometry.validate()
        self.channel_params.validate()
        self.power.validate()
        self.hybrid_params.validate()
        if self.n_users < 1:
            raise ValueError(f"n_users must be >= 1, got {self.n_users}")
        if self.n_streams < 1:
            raise ValueError(f"n_streams must be >= 1, got {self.n_streams}")
        max_streams = min(self.tx_geometry.n_elements, self.rx_geometry.n_elements)
        if self.n_streams > max_streams:
            raise ValueError(
                f"n_streams ({self.n_streams}) exceeds min(n_tx, n_rx) = {max_streams}"
            )
        if self.n_users * self.n_streams > self.tx_geometry.n_elements:
            raise ValueError(
                f"n_users * n_streams = {self.n_users * self.n_streams} exceeds the "
                f"transmit array size {self.tx_geometry.n_elements}"
            )
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (math.isfinite(self.min_separation) and self.min_separation >= 0.0):
            raise ValueError(
                f"min_separation must be finite and >= 0, got {self.min_separation}"
            )
        lo, hi = self.distance_range
        if not (math.isfinite(lo) and lo >= REFERENCE_DISTANCE_M):
            raise ValueError(
                f"distance_range lower bound must be >= {REFERENCE_DISTANCE_M} m, got {lo}"
            )
        if not (math.isfinite(hi) and hi >= lo):
            raise ValueError(f"distance_range must be ordered, got ({lo}, {hi})")
        if self.fixed_distance is not None and not (
            math.isfinite(self.fixed_distance) and self.fixed_distance >= REFERENCE_DISTANCE_M
        ):
            raise ValueError(
                f"fixed_distance must be >= {REFERENCE_DISTANCE_M} m, got {self.fixed_distance}"
            )
        # Resolve RF chain counts so inconsistent hybrid setups fail at
        # configuration time rather than mid-sweep.
        if self.scheme == "hybrid":
            self.resolved_rf_chains()

    def resolved_rf_chains(self) -> tuple[int, int]:
        """(transmit chains per user, receive chains per terminal).

        The base-station chain budget is split evenly across users, so it
        must be a multiple of ``n_users`` and give each user at least
        ``n_streams`` chains.
        """
        total_tx = self.hybrid_params.n_rf_tx
        if total_tx is None:
            total_tx = self.n_users * self.n_streams
        n_rf_rx = self.hybrid_params.n_rf_rx
        if n_rf_rx is None:
            n_rf_rx = self.n_streams
        if total_tx % self.n_users != 0:
            raise ValueError(
                f"n_rf_tx ({total_tx}) must be divisible by n_users ({self.n_users})"
            )
        per_user_tx = total_tx // self.n_users
        if per_user_tx < self.n_streams:
            raise ValueError(
                f"n_rf_tx ({total_tx}) gives {per_user_tx} chains per user, "
                f"fewer than n_streams ({self.n_streams})"
            )
        if n_rf_rx < self.n_streams:
            raise ValueError(
                f"n_rf_rx ({n_rf_rx}) must be >= n_streams ({self.n_streams})"
            )
        if total_tx > self.tx_geometry.n_elements:
            raise ValueError(
                f"n_rf_tx ({total_tx}) exceeds the transmit array size "
                f"{self.tx_geometry.n_elements}"
            )
        if n_rf_rx > self.rx_geometry.n_elements:
            raise ValueError(
                f"n_rf_rx ({n_rf_rx}) exceeds the receive array size "
                f"{self.rx_geometry.n_elements}"
            )
        return per_user_tx, n_rf_rx


@dataclass
class ScenarioRealization:
    """One drawn drop: channels, distances and beamformers per user, plus
    the (departure_angle, arrival_angle) of each user's strongest path."""

    channels: list[ChannelRealization]
    distances: list[float]
    beamformers: list[BeamformerPair]
    dominant_angles: list[tuple[float, float]]


def draw_scenario(config: ScenarioConfig, rng: np.random.Generator) -> ScenarioRealization:
    """Draw one multi-user drop from a single random stream.

    Draw order is fixed: all user distances first (skipped entirely when
    ``fixed_distance`` is set), then one path set per user in user order.
    Beamformer construction consumes no randomness, so two equal seeds give
    bit-identical realizations.
    """
    config.validate()
    k_users = config.n_users
    if config.fixed_distance is not None:
        distances = [float(config.fixed_distance)] * k_users
    else:
        lo, hi = config.distance_range
        distances = [float(d) for d in rng.uniform(lo, hi, k_users)]

    channels: list[ChannelRealization] = []
    beamformers: list[BeamformerPair] = []
    dominant: list[tuple[float, float]] = []
    if config.scheme == "hybrid":
        per_user_tx, n_rf_rx = config.resolved_rf_chains()

    for k in range(k_users):
        path_set = draw_path_set(config.channel_params, distances[k], rng)
        channel = assemble_channel(path_set, config.tx_geometry, config.rx_geometry)
        if config.scheme == "digital":
            pair = digital_svd_pair(channel, config.n_streams)
        elif config.scheme == "hybrid":
            pair = hybrid_pair(
                channel,
                config.n_streams,
                n_rf_tx=per_user_tx,
                n_rf_rx=n_rf_rx,
                tol=config.hybrid_params.tol,
                max_iter=config.hybrid_params.max_iter,
            )
        else:
            try:
                pair = analog_beam_steer(
                    path_set,
                    config.tx_geometry,
                    config.rx_geometry,
                    config.n_streams,
                    min_separation=config.min_separation,
                )
            except InsufficientSeparablePathsError as exc:
                raise InsufficientSeparablePathsError(
                    exc.n_selected, exc.n_requested, user_index=k
                ) from None
        strongest = ranked_paths(path_set)[0]
        channels.append(channel)
        beamformers.append(pair)
        dominant.append((strongest[3], strongest[4]))

    return ScenarioRealization(
        channels=channels,
        distances=distances,
        beamformers=beamformers,
        dominant_angles=dominant,
    )


def evaluate_scenario(
    realization: ScenarioRealization,
    config: ScenarioConfig,
) -> MetricsResult:
    """Spectral and energy efficiency of one drawn drop."""
    result = ase(
        realization.channels,
        [pair.precoder for pair in realization.beamformers],
        [pair.postcoder for pair in realization.beamformers],
        config.power,
        config.n_streams,
        config.n_users,
    )
    return replace(
        result,
        asee=asee(result.sum_ase, config.tx_geometry.n_elements, config.power),
    )
