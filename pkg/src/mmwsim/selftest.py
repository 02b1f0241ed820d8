"""Fast built-in invariant checks, runnable as ``mmwsim selftest``.

Each check is a small seeded experiment that exercises one structural
property end to end.  The suite is meant to finish in a few seconds and
catch gross breakage (bad normalization, non-reproducible sweeps, broken
constraints) without requiring the development test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .beamforming import analog_beam_steer, digital_svd_pair, hybrid_decompose
from .channel import (
    ArrayGeometry,
    ChannelParams,
    LosProbabilityModel,
    PathLossModel,
    draw_path_set,
    assemble_channel,
    path_loss,
    steering_vector,
)
from .harness import SweepSpec, derive_seed, run_sweep
from .metrics import PowerModel, ase, asee, disturbance_covariance
from .scenario import ScenarioConfig, draw_scenario, evaluate_scenario

__all__ = ["run_selftest", "CHECKS"]


def _check_steering_norm() -> None:
    for n in (1, 7, 64, 257):
        geom = ArrayGeometry(n)
        for angle in (-1.5, -0.3, 0.0, 0.7, 1.5):
            norm = np.linalg.norm(steering_vector(geom, angle))
            assert abs(norm - 1.0) < 1e-12, f"steering norm {norm} at n={n}"


def _check_rank_bound() -> None:
    params = ChannelParams(n_clusters=2, n_rays_per_cluster=3)
    rng = np.random.default_rng(7)
    tx, rx = ArrayGeometry(32), ArrayGeometry(16)
    for _ in range(10):
        ps = draw_path_set(params, 25.0, rng)
        h = assemble_channel(ps, tx, rx).matrix
        rank = np.linalg.matrix_rank(h)
        assert rank <= 7, f"rank {rank} exceeds path count bound"


def _check_frobenius_normalization() -> None:
    # With unit gain variance and no direct path, E||H||_F^2 = N_tx*N_rx*L.
    params = ChannelParams(
        n_clusters=2, n_rays_per_cluster=2,
        los_probability_model=LosProbabilityModel(fixed_probability=0.0),
    )
    rng = np.random.default_rng(11)
    tx, rx = ArrayGeometry(16), ArrayGeometry(8)
    expected = 16 * 8 * path_loss(20.0, params.path_loss_model)
    total = 0.0
    n_draws = 4000
    for _ in range(n_draws):
        ps = draw_path_set(params, 20.0, rng)
        total += np.linalg.norm(assemble_channel(ps, tx, rx).matrix, "fro") ** 2
    ratio = total / n_draws / expected
    assert abs(ratio - 1.0) < 0.05, f"Frobenius normalization ratio {ratio}"


def _check_single_user_covariance() -> None:
    rng = np.random.default_rng(3)
    cfg = ScenarioConfig(n_streams=2, fixed_distance=30.0)
    real = draw_scenario(cfg, rng)
    cov = disturbance_covariance(
        0, real.channels, [real.beamformers[0].precoder],
        real.beamformers[0].postcoder, cfg.power, 2, 1,
    )
    expected = cfg.power.noise_variance * np.eye(2)
    assert np.allclose(cov, expected, atol=1e-20), "K=1 covariance is not sigma^2 I"


def _check_ase_closed_form() -> None:
    # Rank-one channel, M=K=1: the rate must equal log2(1 + P*s1^2/sigma^2).
    rng = np.random.default_rng(5)
    cfg = ScenarioConfig(
        channel_params=ChannelParams(
            n_clusters=1, n_rays_per_cluster=1,
            los_probability_model=LosProbabilityModel(fixed_probability=0.0),
        ),
        fixed_distance=25.0,
    )
    real = draw_scenario(cfg, rng)
    s1 = np.linalg.svd(real.channels[0].matrix, compute_uv=False)[0]
    expected = math.log2(1.0 + cfg.power.transmit_power * s1**2 / cfg.power.noise_variance)
    result = evaluate_scenario(real, cfg)
    assert abs(result.sum_ase - expected) < 1e-9 * max(expected, 1.0), (
        f"closed-form rate mismatch: {result.sum_ase} vs {expected}"
    )


def _check_asee_formula() -> None:
    power = PowerModel(transmit_power=2.0, per_antenna_circuit_power=0.5,
                       amp_inefficiency=3.0)
    value = asee(12.0, 10, power)
    assert abs(value - 12.0 / (10 * 0.5 + 3.0 * 2.0)) < 1e-15, "energy efficiency formula"


def _check_hybrid_monotone() -> None:
    rng = np.random.default_rng(9)
    for _ in range(5):
        target, _ = np.linalg.qr(
            rng.standard_normal((32, 3)) + 1j * rng.standard_normal((32, 3))
        )
        factors = hybrid_decompose(target, 6)
        hist = factors.residual_history
        assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:])), (
            f"residual history not monotone: {hist}"
        )
        assert np.allclose(np.abs(factors.rf_matrix), 1 / math.sqrt(32)), (
            "RF entries are not constant modulus"
        )


def _check_analog_constant_modulus() -> None:
    rng = np.random.default_rng(13)
    params = ChannelParams(n_clusters=4, n_rays_per_cluster=1)
    tx, rx = ArrayGeometry(32), ArrayGeometry(16)
    ps = draw_path_set(params, 30.0, rng)
    pair = analog_beam_steer(ps, tx, rx, 2)
    assert np.allclose(np.abs(pair.precoder), 1 / math.sqrt(32)), "analog precoder modulus"
    assert np.allclose(np.abs(pair.postcoder), 1 / math.sqrt(16)), "analog postcoder modulus"


def _check_digital_orthonormal() -> None:
    rng = np.random.default_rng(15)
    cfg = ScenarioConfig(n_streams=3, fixed_distance=40.0)
    real = draw_scenario(cfg, rng)
    q = real.beamformers[0].precoder
    assert np.allclose(q.conj().T @ q, np.eye(3), atol=1e-10), "precoder not orthonormal"


def _check_sweep_reproducible() -> None:
    spec = SweepSpec(
        base=ScenarioConfig(
            tx_geometry=ArrayGeometry(16), rx_geometry=ArrayGeometry(4),
            fixed_distance=20.0,
        ),
        axes=[("power.transmit_power", [0.5, 2.0])],
        n_trials=3,
        master_seed=42,
    )
    first = run_sweep(spec)
    second = run_sweep(spec)
    rows_a = [r.to_row() for r in first]
    rows_b = [r.to_row() for r in second]
    assert rows_a == rows_b, "sweep output is not reproducible"
    assert derive_seed(42, 0, 0) != derive_seed(42, 0, 1), "seed derivation collision"


CHECKS = (
    ("steering_norm", _check_steering_norm),
    ("rank_bound", _check_rank_bound),
    ("frobenius_normalization", _check_frobenius_normalization),
    ("single_user_covariance", _check_single_user_covariance),
    ("ase_closed_form", _check_ase_closed_form),
    ("asee_formula", _check_asee_formula),
    ("hybrid_monotone", _check_hybrid_monotone),
    ("analog_constant_modulus", _check_analog_constant_modulus),
    ("digital_orthonormal", _check_digital_orthonormal),
    ("sweep_reproducible", _check_sweep_reproducible),
)


def run_selftest(verbose: bool = False) -> bool:
    """Run every check; print one PASS/FAIL line each; True when all pass."""
    all_ok = True
    for name, check in CHECKS:
        try:
            check()
        except Exception as exc:  # report and continue; one failure must not hide others
            all_ok = False
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    return all_ok
