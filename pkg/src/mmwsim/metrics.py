"""Link-quality metrics: spectral efficiency and energy efficiency.

Total transmit power is split evenly over users and streams, so every
stream radiates ``transmit_power / (n_users * n_streams)``.  Each user's
rate is a log-det expression against its own noise-plus-interference
covariance after postcoding; energy efficiency divides the sum rate by a
linear consumed-power model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization

__all__ = [
    "PowerModel",
    "MetricsResult",
    "disturbance_covariance",
    "ase",
    "asee",
]

_LOG2 = math.log(2.0)


@dataclass
class PowerModel:
    """Radiated and consumed power in watts.

    ``amp_inefficiency`` scales the radiated power into amplifier draw and
    must exceed 1; ``per_antenna_circuit_power`` is the static draw per
    transmit antenna.
    """

    transmit_power: float = 1.0
    noise_variance: float = 1e-10
    per_antenna_circuit_power: float = 0.0
    amp_inefficiency: float = 2.0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.transmit_power) and self.transmit_power > 0.0):
            raise ValueError(f"transmit_power must be finite and > 0, got {self.transmit_power}")
        if not (math.isfinite(self.noise_variance) and self.noise_variance > 0.0):
            raise ValueError(f"noise_variance must be finite and > 0, got {self.noise_variance}")
        if not (math.isfinite(self.per_antenna_circuit_power)
                and self.per_antenna_circuit_power >= 0.0):
            raise ValueError(
                f"per_antenna_circuit_power must be finite and >= 0, "
                f"got {self.per_antenna_circuit_power}"
            )
        if not (math.isfinite(self.amp_inefficiency) and self.amp_inefficiency > 1.0):
            raise ValueError(
                f"amp_inefficiency must be finite and > 1, got {self.amp_inefficiency}"
            )


@dataclass
class MetricsResult:
    """Per-user and aggregate link metrics for one scenario realization."""

    per_user_ase: list[float] = field(default_factory=list)
    sum_ase: float = 0.0
    asee: float = 0.0


def _check_shapes(
    channels: list[ChannelRealization],
    precoders: list[np.ndarray],
    postcoders: list[np.ndarray],
    n_streams: int,
    n_users: int,
) -> None:
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if n_streams < 1:
        raise ValueError(f"n_streams must be >= 1, got {n_streams}")
    if not (len(channels) == len(precoders) == len(postcoders) == n_users):
        raise ValueError(
            f"expected {n_users} channels, precoders and postcoders, got "
            f"{len(channels)}/{len(precoders)}/{len(postcoders)}"
        )
    n_rx, n_tx = channels[0].matrix.shape
    for k in range(n_users):
        if channels[k].matrix.shape != (n_rx, n_tx):
            raise ValueError(
                f"channel {k} has shape {channels[k].matrix.shape}, "
                f"expected {(n_rx, n_tx)}"
            )
        if precoders[k].shape != (n_tx, n_streams):
            raise ValueError(
                f"precoder {k} has shape {precoders[k].shape}, expected {(n_tx, n_streams)}"
            )
        if postcoders[k].shape != (n_rx, n_streams):
            raise ValueError(
                f"postcoder {k} has shape {postcoders[k].shape}, expected {(n_rx, n_streams)}"
            )


def disturbance_covariance(
    user_index: int,
    channels: list[ChannelRealization],
    precoders: list[np.ndarray],
    postcoder: np.ndarray,
    power: PowerModel,
    n_streams: int,
    n_users: int,
) -> np.ndarray:
    """Noise-plus-interference covariance seen by one user after postcoding.

    The thermal term is ``noise_variance * D^H D``; every other user's
    precoder adds ``(P/(M*K)) * D^H H_k Q_l Q_l^H H_k^H D`` where ``H_k``
    is this user's channel.  The result is symmetrized and checked for
    positive definiteness before being returned.
    """
    if not (0 <= user_index < n_users):
        raise ValueError(f"user_index must lie in [0, {n_users}), got {user_index}")
    d = np.asarray(postcoder)
    cov = power.noise_variance * (d.conj().T @ d)
    if n_users > 1:
        h_k = channels[user_index].matrix
        coef = power.transmit_power / (n_streams * n_users)
        dh = d.conj().T @ h_k
        for other in range(n_users):
            if other == user_index:
                continue
            cross = dh @ precoders[other]
            cov = cov + coef * (cross @ cross.conj().T)
    cov = 0.5 * (cov + cov.conj().T)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"disturbance covariance for user {user_index} is not positive definite; "
            f"the postcoder may have collinear columns"
        ) from None
    return cov


def ase(
    channels: list[ChannelRealization],
    precoders: list[np.ndarray],
    postcoders: list[np.ndarray],
    power: PowerModel,
    n_streams: int,
    n_users: int,
) -> MetricsResult:
    """Achievable spectral efficiency, per user and summed, in bit/s/Hz.

    User ``k`` gets ``log2 det(I + (P/(K*M)) * R^-1 A A^H)`` with
    ``A = D_k^H H_k Q_k`` and ``R`` its disturbance covariance.  The
    determinant is evaluated through a Cholesky whitening of ``R`` followed
    by ``slogdet``, which keeps the computation stable at high SNR; each
    term is clamped at zero to absorb float round-off on degenerate links.
    """
    _check_shapes(channels, precoders, postcoders, n_streams, n_users)
    power.validate()
    coef = power.transmit_power / (n_users * n_streams)
    per_user: list[float] = []
    for k in range(n_users):
        cov = disturbance_covariance(
            k, channels, precoders, postcoders[k], power, n_streams, n_users
        )
        a = postcoders[k].conj().T @ channels[k].matrix @ precoders[k]
        chol = np.linalg.cholesky(cov)
        white = np.linalg.solve(chol, a)  # whitened signal: R^-1 applied via L^-1
        gram = np.eye(n_streams) + coef * (white @ white.conj().T)
        gram = 0.5 * (gram + gram.conj().T)
        sign, logdet = np.linalg.slogdet(gram)
        if sign.real <= 0.0:
            raise ValueError(f"rate determinant for user {k} is not positive")
        per_user.append(max(logdet / _LOG2, 0.0))
    return MetricsResult(per_user_ase=per_user, sum_ase=float(sum(per_user)))


def asee(
    sum_ase: float,
    n_tx_antennas: int,
    power: PowerModel,
) -> float:
    """Energy efficiency in bit/Joule/Hz: sum rate over consumed power.

    Consumed power is ``n_tx_antennas * per_antenna_circuit_power +
    amp_inefficiency * transmit_power`` and must be strictly positive.
    """
    if not (math.isfinite(sum_ase) and sum_ase >= 0.0):
        raise ValueError(f"sum_ase must be finite and >= 0, got {sum_ase}")
    if n_tx_antennas < 1:
        raise ValueError(f"n_tx_antennas must be >= 1, got {n_tx_antennas}")
    power.validate()
    consumed = (
        n_tx_antennas * power.per_antenna_circuit_power
        + power.amp_inefficiency * power.transmit_power
    )
    if not consumed > 0.0:
        raise ValueError(f"consumed power must be > 0, got {consumed}")
    return sum_ase / consumed
