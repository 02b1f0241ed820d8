"""Clustered multipath channel generation for uniform linear arrays.

A channel realization is a sum of rank-one ray contributions: each
scattering cluster contributes a bundle of rays with circularly-symmetric
complex Gaussian gains, angles concentrated around the cluster center, and
a common log-distance attenuation.  An optional direct (line-of-sight)
component is added with a distance-dependent presence probability.  Both
link ends are modeled as uniform linear arrays, half-wavelength spaced by
default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "REFERENCE_DISTANCE_M",
    "ArrayGeometry",
    "PathLossModel",
    "LosProbabilityModel",
    "ChannelParams",
    "PathComponent",
    "LosDescriptor",
    "PathSet",
    "ChannelRealization",
    "steering_vector",
    "steering_matrix",
    "path_loss",
    "reflect_angle",
    "draw_path_set",
    "assemble_channel",
]

REFERENCE_DISTANCE_M = 1.0

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


@dataclass
class ArrayGeometry:
    """Uniform linear array: element count and inter-element spacing.

    Spacing is expressed in carrier wavelengths, so the default of 0.5
    is the classic half-wavelength array.
    """

    n_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements}")
        if not (math.isfinite(self.spacing_wavelengths) and self.spacing_wavelengths > 0.0):
            raise ValueError(
                f"spacing_wavelengths must be finite and > 0, got {self.spacing_wavelengths}"
            )


@dataclass
class PathLossModel:
    """Log-distance attenuation law.

    The loss in dB at distance ``d`` (meters) is
    ``intercept_db + 10 * exponent * log10(d / 1 m)``; :func:`path_loss`
    converts it to a linear power gain in (0, 1].
    """

    intercept_db: float = 70.0
    exponent: float = 3.4

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not math.isfinite(self.intercept_db):
            raise ValueError(f"intercept_db must be finite, got {self.intercept_db}")
        if not (math.isfinite(self.exponent) and self.exponent > 0.0):
            raise ValueError(f"exponent must be finite and > 0, got {self.exponent}")


@dataclass
class LosProbabilityModel:
    """Distance law for the probability that the direct path is unobstructed.

    The probability is 1 up to ``full_prob_distance`` meters and decays as
    ``exp(-(d - full_prob_distance) / decay_distance)`` beyond it.  Setting
    ``fixed_probability`` overrides the law with a constant; 0 and 1 give
    the degenerate always-blocked / always-present cases.
    """

    full_prob_distance: float = 10.0
    decay_distance: float = 60.0
    fixed_probability: float | None = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.full_prob_distance) and self.full_prob_distance >= 0.0):
            raise ValueError(
                f"full_prob_distance must be finite and >= 0, got {self.full_prob_distance}"
            )
        if not (math.isfinite(self.decay_distance) and self.decay_distance > 0.0):
            raise ValueError(f"decay_distance must be finite and > 0, got {self.decay_distance}")
        if self.fixed_probability is not None and not (0.0 <= self.fixed_probability <= 1.0):
            raise ValueError(
                f"fixed_probability must lie in [0, 1], got {self.fixed_probability}"
            )

    def probability(self, distance: float) -> float:
        """Presence probability of the direct path at ``distance`` meters."""
        if self.fixed_probability is not None:
            return self.fixed_probability
        if distance <= self.full_prob_distance:
            return 1.0
        return math.exp(-(distance - self.full_prob_distance) / self.decay_distance)


@dataclass
class ChannelParams:
    """Statistical parameters of the clustered multipath model."""

    n_clusters: int = 3
    n_rays_per_cluster: int = 4
    gain_variance: float = 1.0
    angle_spread: float = math.radians(5.0)
    path_loss_model: PathLossModel = field(default_factory=PathLossModel)
    los_probability_model: LosProbabilityModel = field(default_factory=LosProbabilityModel)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.n_rays_per_cluster < 1:
            raise ValueError(f"n_rays_per_cluster must be >= 1, got {self.n_rays_per_cluster}")
        if not (math.isfinite(self.gain_variance) and self.gain_variance > 0.0):
            raise ValueError(f"gain_variance must be finite and > 0, got {self.gain_variance}")
        if not (math.isfinite(self.angle_spread) and self.angle_spread >= 0.0):
            raise ValueError(f"angle_spread must be finite and >= 0, got {self.angle_spread}")
        self.path_loss_model.validate()
        self.los_probability_model.validate()


@dataclass
class PathComponent:
    """One scattered ray: indices, complex gain, attenuation, angle pair.

    ``cluster_index`` and ``ray_index`` are 1-based.  ``attenuation`` is the
    linear-scale power gain of the log-distance law; angles are radians in
    [-pi/2, pi/2).
    """

    cluster_index: int
    ray_index: int
    gain: complex
    attenuation: float
    departure_angle: float
    arrival_angle: float

    def __post_init__(self) -> None:
        if self.cluster_index < 1 or self.ray_index < 1:
            raise ValueError(
                f"cluster_index and ray_index are 1-based, got "
                f"({self.cluster_index}, {self.ray_index})"
            )
        if not (math.isfinite(self.attenuation) and self.attenuation >= 0.0):
            raise ValueError(f"attenuation must be finite and >= 0, got {self.attenuation}")
        for name, angle in (("departure_angle", self.departure_angle),
                            ("arrival_angle", self.arrival_angle)):
            if not (-_HALF_PI <= angle < _HALF_PI):
                raise ValueError(f"{name} must lie in [-pi/2, pi/2), got {angle}")


@dataclass
class LosDescriptor:
    """Direct-path component.  When ``present`` is False the remaining
    fields are ignored by every consumer."""

    present: bool
    phase: float = 0.0
    distance: float = REFERENCE_DISTANCE_M
    attenuation: float = 0.0
    departure_angle: float = 0.0
    arrival_angle: float = 0.0

    def __post_init__(self) -> None:
        if not self.present:
            return
        if not (0.0 <= self.phase < _TWO_PI):
            raise ValueError(f"phase must lie in [0, 2*pi), got {self.phase}")
        if not (math.isfinite(self.attenuation) and self.attenuation >= 0.0):
            raise ValueError(f"attenuation must be finite and >= 0, got {self.attenuation}")
        for name, angle in (("departure_angle", self.departure_angle),
                            ("arrival_angle", self.arrival_angle)):
            if not (-_HALF_PI <= angle < _HALF_PI):
                raise ValueError(f"{name} must lie in [-pi/2, pi/2), got {angle}")

    @classmethod
    def absent(cls) -> "LosDescriptor":
        return cls(present=False)


@dataclass
class PathSet:
    """All propagation paths of one link: scattered rays plus the direct term."""

    components: list[PathComponent]
    los: LosDescriptor = field(default_factory=LosDescriptor.absent)


@dataclass
class ChannelRealization:
    """Assembled channel matrix (receive-by-transmit) plus the path set and
    normalization it was built from."""

    matrix: np.ndarray
    path_set: PathSet
    normalization: float


def steering_vector(geometry: ArrayGeometry, angle: float) -> np.ndarray:
    """Unit-norm array response of a ULA toward ``angle``.

    Element ``m`` (0-based) carries phase ``-2*pi*spacing*m*sin(angle)``;
    the overall 1/sqrt(N) scale makes the Euclidean norm exactly 1.

    Parameters
    ----------
    geometry : ArrayGeometry
        Element count and spacing in wavelengths.
    angle : float
        Angle in radians, measured from array broadside.

    Returns
    -------
    np.ndarray
        Complex vector of shape ``(geometry.n_elements,)``.
    """
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle}")
    n = geometry.n_elements
    m = np.arange(n)
    phase = -_TWO_PI * geometry.spacing_wavelengths * math.sin(angle)
    return np.exp(1j * phase * m) / math.sqrt(n)


def steering_matrix(geometry: ArrayGeometry, angles: "np.ndarray | list[float]") -> np.ndarray:
    """Stack of steering vectors, one column per angle."""
    ang = np.asarray(angles, dtype=float)
    if ang.ndim != 1:
        raise ValueError(f"angles must be one-dimensional, got shape {ang.shape}")
    if not np.all(np.isfinite(ang)):
        raise ValueError("angles must all be finite")
    m = np.arange(geometry.n_elements)[:, None]
    phase = -_TWO_PI * geometry.spacing_wavelengths * np.sin(ang)[None, :]
    return np.exp(1j * phase * m) / math.sqrt(geometry.n_elements)


def path_loss(distance: float, model: PathLossModel | None = None) -> float:
    """Linear-scale power attenuation at ``distance`` meters.

    Distances below the 1 m reference are rejected rather than
    extrapolated, since the log-distance law is not calibrated there.
    """
    if model is None:
        model = PathLossModel()
    if not (math.isfinite(distance) and distance >= REFERENCE_DISTANCE_M):
        raise ValueError(
            f"distance must be >= {REFERENCE_DISTANCE_M} m (the reference distance), "
            f"got {distance}"
        )
    loss_db = model.intercept_db + 10.0 * model.exponent * math.log10(
        distance / REFERENCE_DISTANCE_M
    )
    return 10.0 ** (-loss_db / 10.0)


def reflect_angle(angles: "np.ndarray | float") -> np.ndarray:
    """Fold arbitrary angles into [-pi/2, pi/2) by reflection at the edges.

    Reflection (rather than modular wrap-around) keeps an out-of-range ray
    close to its cluster center: a ray slightly past +pi/2 reflects back to
    slightly below it.  The upper endpoint is clamped to the largest float
    below pi/2 so the interval stays half-open.
    """
    a = np.asarray(angles, dtype=float)
    t = np.mod(a + _HALF_PI, 2.0 * np.pi)
    folded = _HALF_PI - np.abs(t - np.pi)
    return np.minimum(folded, np.nextafter(_HALF_PI, 0.0))


def draw_path_set(params: ChannelParams, distance: float, rng: np.random.Generator) -> PathSet:
    """Draw the random geometry and gains of one link.

    Cluster centers (departure and arrival) are uniform on [-pi/2, pi/2);
    ray offsets around each center are Laplacian with scale
    ``params.angle_spread`` and folded back into the interval by
    reflection.  Gains are i.i.d. circularly-symmetric complex Gaussian
    with variance ``params.gain_variance``.  Every ray shares the
    attenuation of the link distance.

    The draw order is fixed: departure centers, arrival centers, departure
    offsets, arrival offsets, gains, then the direct-path fields.  The
    direct-path phase and angles are drawn even when the presence flag
    comes up False, so the stream layout never depends on the outcome.
    """
    params.validate()
    att = path_loss(distance, params.path_loss_model)
    n_cl = params.n_clusters
    n_ray = params.n_rays_per_cluster

    dep_centers = rng.uniform(-_HALF_PI, _HALF_PI, n_cl)
    arr_centers = rng.uniform(-_HALF_PI, _HALF_PI, n_cl)
    dep_offsets = rng.laplace(0.0, params.angle_spread, (n_cl, n_ray)) if params.angle_spread > 0.0 \
        else np.zeros((n_cl, n_ray))
    arr_offsets = rng.laplace(0.0, params.angle_spread, (n_cl, n_ray)) if params.angle_spread > 0.0 \
        else np.zeros((n_cl, n_ray))
    scale = math.sqrt(params.gain_variance / 2.0)
    gains = scale * (rng.standard_normal((n_cl, n_ray)) + 1j * rng.standard_normal((n_cl, n_ray)))

    dep_angles = reflect_angle(dep_centers[:, None] + dep_offsets)
    arr_angles = reflect_angle(arr_centers[:, None] + arr_offsets)

    components = [
        PathComponent(
            cluster_index=i + 1,
            ray_index=l + 1,
            gain=complex(gains[i, l]),
            attenuation=att,
            departure_angle=float(dep_angles[i, l]),
            arrival_angle=float(arr_angles[i, l]),
        )
        for i in range(n_cl)
        for l in range(n_ray)
    ]

    p_los = params.los_probability_model.probability(distance)
    present = bool(rng.random() < p_los)
    phase = float(rng.uniform(0.0, _TWO_PI))
    los_dep = float(rng.uniform(-_HALF_PI, _HALF_PI))
    los_arr = float(rng.uniform(-_HALF_PI, _HALF_PI))
    los = LosDescriptor(
        present=present,
        phase=phase,
        distance=distance,
        attenuation=att,
        departure_angle=los_dep,
        arrival_angle=los_arr,
    )
    return PathSet(components=components, los=los)


def assemble_channel(
    path_set: PathSet,
    tx_geometry: ArrayGeometry,
    rx_geometry: ArrayGeometry,
) -> ChannelRealization:
    """Build the receive-by-transmit channel matrix from a drawn path set.

    Each ray contributes the outer product of its arrival and departure
    steering vectors, weighted by gain and the square root of its
    attenuation.  The sum is scaled by sqrt(N_rx * N_tx / n_rays) so the
    expected squared Frobenius norm grows with the product of the array
    sizes rather than vanishing with the 1/sqrt(N) steering normalization.
    The direct term, when present, enters with deterministic magnitude
    sqrt(N_rx * N_tx * attenuation) and its own uniform phase.

    Assembly is deterministic: it consumes no randomness, so repeated calls
    on the same path set return bit-identical matrices.
    """
    comps = path_set.components
    if not comps:
        raise ValueError("path_set has no scattered components")
    n_t = tx_geometry.n_elements
    n_r = rx_geometry.n_elements
    gamma = math.sqrt(n_r * n_t / len(comps))

    a_rx = steering_matrix(rx_geometry, [c.arrival_angle for c in comps])
    a_tx = steering_matrix(tx_geometry, [c.departure_angle for c in comps])
    weights = np.array([c.gain * math.sqrt(c.attenuation) for c in comps])
    matrix = gamma * ((a_rx * weights) @ a_tx.conj().T)

    los = path_set.los
    if los.present:
        amp = math.sqrt(n_r * n_t * los.attenuation)
        matrix = matrix + amp * np.exp(1j * los.phase) * np.outer(
            steering_vector(rx_geometry, los.arrival_angle),
            steering_vector(tx_geometry, los.departure_angle).conj(),
        )

    return ChannelRealization(matrix=matrix, path_set=path_set, normalization=gamma)
