"""Transmit/receive beamformer construction.

Three schemes with a common output type:

* ``digital`` -- unconstrained SVD beamforming (top singular subspaces);
* ``hybrid``  -- a constant-modulus RF stage times a small baseband stage,
  fitted to the digital solution by alternating least squares;
* ``analog``  -- one phase-only steering column per stream, pointed at the
  strongest angularly-separated paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, ChannelRealization, PathSet, steering_matrix

__all__ = [
    "SCHEMES",
    "BeamformerPair",
    "HybridFactors",
    "InsufficientSeparablePathsError",
    "digital_svd_pair",
    "hybrid_decompose",
    "hybrid_pair",
    "ranked_paths",
    "analog_beam_steer",
]

SCHEMES = ("digital", "hybrid", "analog")

DEFAULT_MIN_SEPARATION = math.radians(5.0)


@dataclass
class BeamformerPair:
    """Per-user precoder (n_tx, n_streams) and postcoder (n_rx, n_streams).

    Columns are unit-norm for every scheme.
    """

    precoder: np.ndarray
    postcoder: np.ndarray
    scheme: str


@dataclass
class HybridFactors:
    """Result of one constant-modulus factorization.

    ``rf_matrix`` has entries of modulus 1/sqrt(n_elements);
    ``residual_history`` records the Frobenius misfit after the initial
    guess and after each accepted update, and is non-increasing.
    """

    rf_matrix: np.ndarray
    baseband_matrix: np.ndarray
    residual_history: list[float] = field(default_factory=list)


class InsufficientSeparablePathsError(RuntimeError):
    """Raised when beam steering cannot find enough angularly-separated paths."""

    def __init__(self, n_selected: int, n_requested: int, user_index: int | None = None):
        self.n_selected = n_selected
        self.n_requested = n_requested
        self.user_index = user_index
        who = f"user {user_index}: " if user_index is not None else ""
        super().__init__(
            f"{who}only {n_selected} of {n_requested} requested paths satisfy the "
            f"angular separation constraint"
        )


def digital_svd_pair(channel: ChannelRealization, n_streams: int) -> BeamformerPair:
    """Unconstrained beamformers from the top singular subspaces.

    The precoder stacks the right singular vectors of the channel matrix
    belonging to its ``n_streams`` largest singular values; the postcoder
    stacks the corresponding left singular vectors.  Columns are ordered by
    decreasing singular value and are orthonormal by construction.
    """
    h = channel.matrix
    n_rx, n_tx = h.shape
    if not (1 <= n_streams <= min(n_rx, n_tx)):
        raise ValueError(
            f"n_streams must lie in [1, min(n_rx, n_tx)] = [1, {min(n_rx, n_tx)}], "
            f"got {n_streams}"
        )
    u, _, vh = np.linalg.svd(h, full_matrices=False)
    return BeamformerPair(
        precoder=vh[:n_streams].conj().T,
        postcoder=u[:, :n_streams],
        scheme="digital",
    )


def _phase_project(x: np.ndarray, n_elements: int) -> np.ndarray:
    # Nearest constant-modulus matrix in Frobenius norm: keep phases, fix
    # magnitudes at 1/sqrt(N).  np.angle(0) == 0, so zero entries map to a
    # deterministic real entry.
    return np.exp(1j * np.angle(x)) / math.sqrt(n_elements)


def hybrid_decompose(
    target: np.ndarray,
    n_rf_chains: int,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> HybridFactors:
    """Factor ``target`` (n_elements, n_streams) as RF @ baseband.

    RF is (n_elements, n_rf_chains) with all entries of modulus
    1/sqrt(n_elements); baseband is (n_rf_chains, n_streams) and
    unconstrained.  Alternating updates: the baseband factor is the least
    squares solution for the current RF factor, then the RF factor is the
    phase projection of ``target @ baseband^H``.  A phase update is only
    accepted if it does not increase the misfit, which makes the recorded
    residual history non-increasing; a rejected update terminates the
    iteration.  Iteration also stops once the relative residual decrease
    falls below ``tol`` or after ``max_iter`` rounds.
    """
    target = np.asarray(target, dtype=complex)
    if target.ndim != 2:
        raise ValueError(f"target must be a matrix, got shape {target.shape}")
    n_elements, n_streams = target.shape
    if n_rf_chains < n_streams:
        raise ValueError(
            f"n_rf_chains must be >= n_streams, got {n_rf_chains} < {n_streams}"
        )
    if not (math.isfinite(tol) and tol > 0.0):
        raise ValueError(f"tol must be finite and > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    rf = np.empty((n_elements, n_rf_chains), dtype=complex)
    rf[:, :n_streams] = _phase_project(target, n_elements)
    if n_rf_chains > n_streams:
        # Spare chains start as distinct uniform-phase-ramp columns; a
        # constant fill would make the initial RF factor rank deficient.
        rows = np.arange(n_elements)[:, None]
        cols = np.arange(n_streams, n_rf_chains)[None, :]
        rf[:, n_streams:] = np.exp(2j * np.pi * rows * cols / n_elements) / math.sqrt(n_elements)

    baseband = np.zeros((n_rf_chains, n_streams), dtype=complex)
    baseband[:n_streams, :n_streams] = np.eye(n_streams)

    def misfit(rf_m: np.ndarray, bb_m: np.ndarray) -> float:
        return float(np.linalg.norm(target - rf_m @ bb_m))

    history = [misfit(rf, baseband)]
    for _ in range(max_iter):
        baseband = np.linalg.lstsq(rf, target, rcond=None)[0]
        resid_ls = misfit(rf, baseband)
        rf_candidate = _phase_project(target @ baseband.conj().T, n_elements)
        resid_candidate = misfit(rf_candidate, baseband)
        if resid_candidate <= resid_ls:
            rf = rf_candidate
            history.append(resid_candidate)
        else:
            # The phase step cannot improve this iterate; keep the least
            # squares state and stop.
            history.append(resid_ls)
            break
        if history[-2] - history[-1] < tol * max(history[-2], 1e-30):
            break

    return HybridFactors(rf_matrix=rf, baseband_matrix=baseband, residual_history=history)


def _unit_columns(matrix: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms < 1e-12):
        raise ValueError(f"{what} produced a numerically zero column")
    return matrix / norms


def hybrid_pair(
    channel: ChannelRealization,
    n_streams: int,
    n_rf_tx: int | None = None,
    n_rf_rx: int | None = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> BeamformerPair:
    """Constant-modulus approximation of the digital SVD beamformers.

    Both sides are factored independently through :func:`hybrid_decompose`
    against the digital precoder/postcoder, then each RF @ baseband product
    is renormalized to unit columns.  RF chain counts default to
    ``n_streams`` per side.
    """
    digital = digital_svd_pair(channel, n_streams)
    if n_rf_tx is None:
        n_rf_tx = n_streams
    if n_rf_rx is None:
        n_rf_rx = n_streams
    tx = hybrid_decompose(digital.precoder, n_rf_tx, tol=tol, max_iter=max_iter)
    rx = hybrid_decompose(digital.postcoder, n_rf_rx, tol=tol, max_iter=max_iter)
    return BeamformerPair(
        precoder=_unit_columns(tx.rf_matrix @ tx.baseband_matrix, "hybrid precoder"),
        postcoder=_unit_columns(rx.rf_matrix @ rx.baseband_matrix, "hybrid postcoder"),
        scheme="hybrid",
    )


def ranked_paths(path_set: PathSet) -> list[tuple[float, int, int, float, float]]:
    """All paths ranked strongest-first, with a deterministic tie-break.

    Returns tuples ``(strength, cluster_index, ray_index, departure_angle,
    arrival_angle)`` sorted by decreasing strength and then by ascending
    (cluster_index, ray_index).  Strength of a scattered ray is
    ``|gain|^2 * attenuation``.  The direct path, when present, is ranked
    on the same scale: its matrix weight is sqrt(N_rx*N_tx*attenuation)
    versus gamma*|gain|*sqrt(attenuation) for a ray, and dividing out
    gamma^2 = N_rx*N_tx/n_rays leaves ``attenuation * n_rays``.  It carries
    indices (0, 0) so it wins exact ties.
    """
    entries = [
        (abs(c.gain) ** 2 * c.attenuation, c.cluster_index, c.ray_index,
         c.departure_angle, c.arrival_angle)
        for c in path_set.components
    ]
    los = path_set.los
    if los.present:
        entries.append(
            (los.attenuation * len(path_set.components), 0, 0,
             los.departure_angle, los.arrival_angle)
        )
    entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    return entries


def analog_beam_steer(
    path_set: PathSet,
    tx_geometry: ArrayGeometry,
    rx_geometry: ArrayGeometry,
    n_streams: int,
    min_separation: float = DEFAULT_MIN_SEPARATION,
) -> BeamformerPair:
    """Phase-only beamformers steered at the strongest separated paths.

    Paths are visited strongest-first (see :func:`ranked_paths`); a path is
    selected only if its departure angle differs by at least
    ``min_separation`` from every previously selected departure angle and
    its arrival angle likewise from every selected arrival angle.  Each
    selected path yields one transmit and one receive steering column.
    """
    if n_streams < 1:
        raise ValueError(f"n_streams must be >= 1, got {n_streams}")
    if not (math.isfinite(min_separation) and min_separation >= 0.0):
        raise ValueError(f"min_separation must be finite and >= 0, got {min_separation}")

    chosen: list[tuple[float, float]] = []
    for _, _, _, dep, arr in ranked_paths(path_set):
        if all(
            abs(dep - d0) >= min_separation and abs(arr - a0) >= min_separation
            for d0, a0 in chosen
        ):
            chosen.append((dep, arr))
            if len(chosen) == n_streams:
                break
    if len(chosen) < n_streams:
        raise InsufficientSeparablePathsError(len(chosen), n_streams)

    return BeamformerPair(
        precoder=steering_matrix(tx_geometry, [d for d, _ in chosen]),
        postcoder=steering_matrix(rx_geometry, [a for _, a in chosen]),
        scheme="analog",
    )
