"""Shared builders for synthetic propagation geometry used across tests."""

from __future__ import annotations

import math

import numpy as np

from mmwsim.channel import (
    ChannelRealization,
    LosDescriptor,
    PathComponent,
    PathSet,
)


def make_component(
    cluster: int = 1,
    ray: int = 1,
    gain: complex = 1.0 + 0.0j,
    attenuation: float = 1.0,
    departure: float = 0.0,
    arrival: float = 0.0,
) -> PathComponent:
    return PathComponent(
        cluster_index=cluster,
        ray_index=ray,
        gain=complex(gain),
        attenuation=attenuation,
        departure_angle=departure,
        arrival_angle=arrival,
    )


def single_path_set(
    gain: complex = 1.0 + 0.0j,
    attenuation: float = 1.0,
    departure: float = 0.0,
    arrival: float = 0.0,
) -> PathSet:
    return PathSet(
        components=[make_component(gain=gain, attenuation=attenuation,
                                   departure=departure, arrival=arrival)],
        los=LosDescriptor.absent(),
    )


def multi_path_set(
    gains,
    departures,
    arrivals,
    attenuation: float = 1.0,
) -> PathSet:
    components = [
        make_component(cluster=i + 1, ray=1, gain=g, attenuation=attenuation,
                       departure=d, arrival=a)
        for i, (g, d, a) in enumerate(zip(gains, departures, arrivals))
    ]
    return PathSet(components=components, los=LosDescriptor.absent())


def dft_grid_angles(n_elements: int, indices) -> list[float]:
    """Angles whose steering vectors are exactly orthogonal on an N-element
    half-wavelength array: sin values spaced by 2/N."""
    return [math.asin(2.0 * k / n_elements) for k in indices]


def separated_sin_values(rng: np.random.Generator, count: int,
                         min_sep: float = 0.2) -> np.ndarray:
    """Rejection-sample sin-domain directions with pairwise separation."""
    while True:
        values = rng.uniform(-0.9, 0.9, count)
        pairwise = np.abs(values[:, None] - values[None, :])
        if np.all(pairwise[np.triu_indices(count, 1)] >= min_sep):
            return values


def separated_path_set(rng: np.random.Generator, n_paths: int = 4,
                       min_sep: float = 0.2) -> PathSet:
    """Synthetic unit-attenuation paths with sin-angle separation on both
    the departure and the arrival side."""
    departures = np.arcsin(separated_sin_values(rng, n_paths, min_sep))
    arrivals = np.arcsin(separated_sin_values(rng, n_paths, min_sep))
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) \
        / math.sqrt(2.0)
    return multi_path_set(gains, departures, arrivals)


def fake_realization(matrix: np.ndarray) -> ChannelRealization:
    """Wrap a hand-built matrix in a realization (for pure-math tests)."""
    return ChannelRealization(
        matrix=np.asarray(matrix, dtype=complex),
        path_set=single_path_set(),
        normalization=1.0,
    )
