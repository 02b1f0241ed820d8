"""Beamformer construction: SVD pairs, hybrid factorization, beam steering.

Hand-worked selection cases and one-shot oracles are built independently
inside the tests and compared against the library's outputs.
"""

import math

import numpy as np
import pytest

from mmwsim.beamforming import (
    BeamformerPair,
    InsufficientSeparablePathsError,
    analog_beam_steer,
    digital_svd_pair,
    hybrid_decompose,
    hybrid_pair,
    ranked_paths,
)
from mmwsim.channel import (
    ArrayGeometry,
    ChannelParams,
    LosDescriptor,
    PathSet,
    assemble_channel,
    draw_path_set,
    steering_vector,
)
from mmwsim.metrics import PowerModel, ase

from conftest import (
    dft_grid_angles,
    fake_realization,
    make_component,
    multi_path_set,
    separated_path_set,
    single_path_set,
)


def _sum_ase(channel, pair: BeamformerPair, noise_variance: float,
             n_streams: int) -> float:
    power = PowerModel(transmit_power=1.0, noise_variance=noise_variance)
    result = ase([channel], [pair.precoder], [pair.postcoder], power, n_streams, 1)
    return result.sum_ase


# ---------------------------------------------------------------- digital


def test_digital_rank_one_alignment():
    # For a one-path channel the top singular pair is the steering pair:
    # the precoder must align with a_t up to a unit-modulus scalar.
    tx, rx = ArrayGeometry(16), ArrayGeometry(8)
    ps = single_path_set(gain=0.7 - 0.2j, attenuation=0.5, departure=0.35, arrival=-0.9)
    channel = assemble_channel(ps, tx, rx)
    pair = digital_svd_pair(channel, 1)
    a_t = steering_vector(tx, 0.35)
    a_r = steering_vector(rx, -0.9)
    assert abs(np.vdot(pair.precoder[:, 0], a_t)) == pytest.approx(1.0, abs=1e-9)
    assert abs(np.vdot(pair.postcoder[:, 0], a_r)) == pytest.approx(1.0, abs=1e-9)
    assert pair.scheme == "digital"


def test_digital_explicit_two_mode_channel():
    # H = 3*u1 v1^H + 1*u2 v2^H with orthonormal (u_i), (v_i): M=1 must
    # return (v1, u1) up to phase, and the paired gain must be 3.
    rng = np.random.default_rng(8)
    u, _ = np.linalg.qr(rng.standard_normal((12, 2)) + 1j * rng.standard_normal((12, 2)))
    v, _ = np.linalg.qr(rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)))
    h = 3.0 * np.outer(u[:, 0], v[:, 0].conj()) + 1.0 * np.outer(u[:, 1], v[:, 1].conj())
    pair = digital_svd_pair(fake_realization(h), 1)
    assert abs(np.vdot(pair.precoder[:, 0], v[:, 0])) == pytest.approx(1.0, abs=1e-9)
    assert abs(np.vdot(pair.postcoder[:, 0], u[:, 0])) == pytest.approx(1.0, abs=1e-9)
    gain = np.linalg.norm(h @ pair.precoder[:, 0])
    assert gain == pytest.approx(3.0, rel=1e-12)


def test_digital_full_rank_orthonormal():
    rng = np.random.default_rng(21)
    h = rng.standard_normal((6, 10)) + 1j * rng.standard_normal((6, 10))
    pair = digital_svd_pair(fake_realization(h), 6)
    np.testing.assert_allclose(pair.precoder.conj().T @ pair.precoder,
                               np.eye(6), atol=1e-9)
    np.testing.assert_allclose(pair.postcoder.conj().T @ pair.postcoder,
                               np.eye(6), atol=1e-9)


def test_digital_singular_values_descending():
    rng = np.random.default_rng(23)
    h = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    pair = digital_svd_pair(fake_realization(h), 4)
    gains = [np.linalg.norm(h @ pair.precoder[:, m]) for m in range(4)]
    assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))


def test_digital_stream_count_validation():
    h = np.eye(4, dtype=complex)
    with pytest.raises(ValueError):
        digital_svd_pair(fake_realization(h), 0)
    with pytest.raises(ValueError):
        digital_svd_pair(fake_realization(h), 5)


def test_digital_deterministic():
    rng = np.random.default_rng(25)
    ps = draw_path_set(ChannelParams(), 30.0, rng)
    channel = assemble_channel(ps, ArrayGeometry(32), ArrayGeometry(16))
    a = digital_svd_pair(channel, 3)
    b = digital_svd_pair(channel, 3)
    assert np.array_equal(a.precoder, b.precoder)
    assert np.array_equal(a.postcoder, b.postcoder)


# ---------------------------------------------------------------- hybrid


def test_hybrid_steering_target_immediate_fit():
    # A single steering vector is itself constant-modulus, so the very
    # first factorization state already fits it essentially exactly.
    target = steering_vector(ArrayGeometry(32), 0.6).reshape(-1, 1)
    factors = hybrid_decompose(target, 1)
    assert factors.residual_history[0] < 1e-9
    assert np.linalg.norm(target - factors.rf_matrix @ factors.baseband_matrix) < 1e-9


def test_hybrid_initialization_is_phase_projection():
    # One-shot oracle: the first recorded residual must equal the misfit of
    # the element-wise phase projection with an identity baseband.
    rng = np.random.default_rng(31)
    target, _ = np.linalg.qr(rng.standard_normal((24, 3)) + 1j * rng.standard_normal((24, 3)))
    rf_oracle = np.exp(1j * np.angle(target)) / math.sqrt(24)
    oracle = float(np.linalg.norm(target - rf_oracle))
    factors = hybrid_decompose(target, 3)
    assert factors.residual_history[0] == pytest.approx(oracle, rel=1e-12)
    assert factors.residual_history[-1] <= oracle + 1e-12


def test_hybrid_orthogonal_steering_targets_beat_initialization():
    angles = dft_grid_angles(16, [1, 4])
    geom = ArrayGeometry(16)
    target = np.stack([steering_vector(geom, a) for a in angles], axis=1)
    factors = hybrid_decompose(target, 2)
    assert factors.residual_history[-1] <= factors.residual_history[0] + 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_hybrid_residual_history_monotone(seed):
    rng = np.random.default_rng(seed)
    target, _ = np.linalg.qr(rng.standard_normal((40, 4)) + 1j * rng.standard_normal((40, 4)))
    factors = hybrid_decompose(target, 6)
    hist = factors.residual_history
    assert len(hist) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_hybrid_constant_modulus_entries():
    rng = np.random.default_rng(33)
    target, _ = np.linalg.qr(rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)))
    factors = hybrid_decompose(target, 4)
    np.testing.assert_allclose(np.abs(factors.rf_matrix),
                               np.full((20, 4), 1.0 / math.sqrt(20)), atol=1e-9)
    assert factors.baseband_matrix.shape == (4, 2)


def test_hybrid_full_chain_count_fits_exactly():
    # With as many RF chains as elements the factorization is overcomplete
    # and the least-squares step alone reproduces the target.
    rng = np.random.default_rng(35)
    target, _ = np.linalg.qr(rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2)))
    factors = hybrid_decompose(target, 16)
    resid = np.linalg.norm(target - factors.rf_matrix @ factors.baseband_matrix)
    assert resid < 1e-6 * np.linalg.norm(target)


def test_hybrid_chain_count_validation():
    target = np.eye(4, 2, dtype=complex)
    with pytest.raises(ValueError):
        hybrid_decompose(target, 1)
    with pytest.raises(ValueError):
        hybrid_decompose(target, 2, tol=0.0)
    with pytest.raises(ValueError):
        hybrid_decompose(target, 2, max_iter=0)


def test_hybrid_pair_unit_columns_and_label():
    rng = np.random.default_rng(37)
    ps = draw_path_set(ChannelParams(), 30.0, rng)
    channel = assemble_channel(ps, ArrayGeometry(32), ArrayGeometry(16))
    pair = hybrid_pair(channel, 2, n_rf_tx=4, n_rf_rx=2)
    assert pair.scheme == "hybrid"
    np.testing.assert_allclose(np.linalg.norm(pair.precoder, axis=0),
                               np.ones(2), atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(pair.postcoder, axis=0),
                               np.ones(2), atol=1e-9)


def test_hybrid_single_path_matches_digital_rate():
    # One path, one stream, one chain: the steering target is constant
    # modulus, so hybrid and digital deliver the same rate.
    tx, rx = ArrayGeometry(24), ArrayGeometry(12)
    ps = single_path_set(gain=1.1 + 0.3j, attenuation=0.8, departure=0.25, arrival=0.4)
    channel = assemble_channel(ps, tx, rx)
    digital = digital_svd_pair(channel, 1)
    hybrid = hybrid_pair(channel, 1, n_rf_tx=1, n_rf_rx=1)
    noise = 1e-2
    assert _sum_ase(channel, hybrid, noise, 1) == pytest.approx(
        _sum_ase(channel, digital, noise, 1), abs=1e-6)


def test_hybrid_separated_paths_small_gap_at_large_arrays():
    # Two well-separated paths on a 64x256 link: the constant-modulus
    # approximation costs less than 5% of the digital rate.
    rng = np.random.default_rng(39)
    tx, rx = ArrayGeometry(256), ArrayGeometry(64)
    gaps = []
    for _ in range(10):
        ps = separated_path_set(rng, n_paths=2)
        channel = assemble_channel(ps, tx, rx)
        noise = (64 * 256 / 2) / 10.0  # fixed normalized operating point
        dig = _sum_ase(channel, digital_svd_pair(channel, 2), noise, 2)
        hyb = _sum_ase(channel, hybrid_pair(channel, 2, n_rf_tx=2, n_rf_rx=2), noise, 2)
        gaps.append((dig - hyb) / dig)
    assert np.mean(gaps) < 0.05


# ---------------------------------------------------------------- ranking


def test_ranked_paths_order_and_tiebreak():
    # Strengths: path A 0.9, path B 0.4, path C 0.9 (tie with A; A's lower
    # (cluster, ray) index wins the tie).
    ps = PathSet(
        components=[
            make_component(cluster=1, ray=1, gain=3.0, attenuation=0.1),   # 0.9
            make_component(cluster=1, ray=2, gain=2.0, attenuation=0.1,
                           departure=0.5, arrival=0.5),                     # 0.4
            make_component(cluster=2, ray=1, gain=3.0, attenuation=0.1,
                           departure=-0.5, arrival=-0.5),                   # 0.9 tie
        ],
        los=LosDescriptor.absent(),
    )
    order = [(e[1], e[2]) for e in ranked_paths(ps)]
    assert order == [(1, 1), (2, 1), (1, 2)]


def test_ranked_paths_los_strength_scale():
    # The direct path competes at strength attenuation * n_paths; indices
    # (0, 0) win exact ties.
    att = 0.1
    ps = PathSet(
        components=[make_component(cluster=1, ray=1, gain=1.0, attenuation=att)],
        los=LosDescriptor(present=True, phase=0.5, distance=10.0, attenuation=att,
                          departure_angle=-0.4, arrival_angle=-0.4),
    )
    entries = ranked_paths(ps)
    # LOS strength = 0.1 * 1 exactly ties the unit-gain ray; (0, 0) wins.
    assert (entries[0][1], entries[0][2]) == (0, 0)
    assert entries[0][0] == pytest.approx(0.1, rel=1e-12)
    assert (entries[1][1], entries[1][2]) == (1, 1)


# ---------------------------------------------------------------- analog


def test_analog_selects_requested_angles_directly():
    deps = [math.radians(10.0), math.radians(40.0)]
    arrs = [math.radians(-20.0), math.radians(35.0)]
    ps = multi_path_set([2.0, 1.0], deps, arrs)
    tx, rx = ArrayGeometry(16), ArrayGeometry(8)
    pair = analog_beam_steer(ps, tx, rx, 2)
    np.testing.assert_allclose(pair.precoder[:, 0], steering_vector(tx, deps[0]), atol=1e-12)
    np.testing.assert_allclose(pair.precoder[:, 1], steering_vector(tx, deps[1]), atol=1e-12)
    np.testing.assert_allclose(pair.postcoder[:, 0], steering_vector(rx, arrs[0]), atol=1e-12)
    assert pair.scheme == "analog"


def test_analog_greedy_skips_conflicting_path():
    # Departures 10, 12, 40 degrees with strictly decreasing strengths and a
    # 5-degree spacing rule: the hand-applied greedy picks 10 then 40,
    # skipping 12 (too close to 10).
    deps = [math.radians(a) for a in (10.0, 12.0, 40.0)]
    arrs = [math.radians(a) for a in (-30.0, 20.0, 60.0)]
    ps = multi_path_set([3.0, 2.0, 1.0], deps, arrs)
    tx, rx = ArrayGeometry(16), ArrayGeometry(8)
    pair = analog_beam_steer(ps, tx, rx, 2, min_separation=math.radians(5.0))
    np.testing.assert_allclose(pair.precoder[:, 0], steering_vector(tx, deps[0]), atol=1e-12)
    np.testing.assert_allclose(pair.precoder[:, 1], steering_vector(tx, deps[2]), atol=1e-12)


def test_analog_arrival_side_conflict_also_rejects():
    # Second-strongest path is far in departure but close in arrival: the
    # separation rule applies to both sides independently.
    deps = [math.radians(a) for a in (0.0, 45.0, -40.0)]
    arrs = [math.radians(a) for a in (10.0, 12.0, -50.0)]
    ps = multi_path_set([3.0, 2.0, 1.0], deps, arrs)
    pair = analog_beam_steer(ps, ArrayGeometry(16), ArrayGeometry(8), 2)
    np.testing.assert_allclose(pair.precoder[:, 1],
                               steering_vector(ArrayGeometry(16), deps[2]), atol=1e-12)


def test_analog_top_one_selection():
    rng = np.random.default_rng(43)
    ps = separated_path_set(rng, n_paths=3)
    best = ranked_paths(ps)[0]
    pair = analog_beam_steer(ps, ArrayGeometry(16), ArrayGeometry(8), 1)
    np.testing.assert_allclose(pair.precoder[:, 0],
                               steering_vector(ArrayGeometry(16), best[3]), atol=1e-12)


def test_analog_includes_los_when_dominant():
    att = 0.5
    ps = PathSet(
        components=[make_component(gain=0.1, attenuation=att,
                                   departure=0.8, arrival=0.8)],
        los=LosDescriptor(present=True, phase=0.0, distance=5.0, attenuation=att,
                          departure_angle=-0.2, arrival_angle=0.3),
    )
    pair = analog_beam_steer(ps, ArrayGeometry(16), ArrayGeometry(8), 1)
    np.testing.assert_allclose(pair.precoder[:, 0],
                               steering_vector(ArrayGeometry(16), -0.2), atol=1e-12)


def test_analog_insufficient_paths_error():
    # Three rays within two degrees of each other cannot yield two beams
    # at a five-degree spacing.
    deps = [math.radians(a) for a in (10.0, 11.0, 12.0)]
    arrs = [math.radians(a) for a in (5.0, 6.0, 7.0)]
    ps = multi_path_set([3.0, 2.0, 1.0], deps, arrs)
    with pytest.raises(InsufficientSeparablePathsError) as info:
        analog_beam_steer(ps, ArrayGeometry(16), ArrayGeometry(8), 2)
    assert info.value.n_selected == 1
    assert info.value.n_requested == 2
    assert "1" in str(info.value) and "2" in str(info.value)


def test_analog_zero_separation_accepts_everything():
    deps = [math.radians(a) for a in (10.0, 10.5, 11.0)]
    ps = multi_path_set([3.0, 2.0, 1.0], deps, deps)
    pair = analog_beam_steer(ps, ArrayGeometry(16), ArrayGeometry(8), 3,
                             min_separation=0.0)
    assert pair.precoder.shape == (16, 3)


def test_analog_constant_modulus_and_unit_norm():
    rng = np.random.default_rng(47)
    ps = separated_path_set(rng, n_paths=4)
    pair = analog_beam_steer(ps, ArrayGeometry(32), ArrayGeometry(16), 3)
    np.testing.assert_allclose(np.abs(pair.precoder),
                               np.full((32, 3), 1.0 / math.sqrt(32)), atol=1e-9)
    np.testing.assert_allclose(np.abs(pair.postcoder),
                               np.full((16, 3), 1.0 / math.sqrt(16)), atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(pair.precoder, axis=0),
                               np.ones(3), atol=1e-9)


# ------------------------------------------------- scheme comparisons


def test_digital_dominates_other_schemes_single_user():
    # The exact top-M singular subspaces maximize the rate under the same
    # uniform power split, so digital can only be matched, never beaten.
    rng = np.random.default_rng(49)
    tx, rx = ArrayGeometry(64), ArrayGeometry(32)
    for _ in range(10):
        ps = separated_path_set(rng, n_paths=4)
        channel = assemble_channel(ps, tx, rx)
        noise = (64 * 32 / 4) / 10.0
        m = 2
        dig = _sum_ase(channel, digital_svd_pair(channel, m), noise, m)
        ana = _sum_ase(channel, analog_beam_steer(ps, tx, rx, m), noise, m)
        hyb = _sum_ase(channel, hybrid_pair(channel, m, n_rf_tx=m, n_rf_rx=m),
                       noise, m)
        assert dig >= ana - 1e-6
        assert dig >= hyb - 1e-6


def test_analog_gap_shrinks_with_array_size():
    # With sin-angle separations >= 0.2 the steering vectors decorrelate as
    # the arrays grow, so beam steering approaches the digital rate.  Noise
    # scales with the array gain to keep the operating point comparable
    # across tiers.
    tiers = [(16, 32), (32, 64), (64, 256)]
    mean_gaps = []
    for n_rx, n_tx in tiers:
        tx, rx = ArrayGeometry(n_tx), ArrayGeometry(n_rx)
        noise = (n_rx * n_tx / 4) / 10.0
        gaps = []
        for seed in range(100):
            rng = np.random.default_rng(9000 + seed)
            ps = separated_path_set(rng, n_paths=4)
            channel = assemble_channel(ps, tx, rx)
            dig = _sum_ase(channel, digital_svd_pair(channel, 2), noise, 2)
            ana = _sum_ase(channel, analog_beam_steer(ps, tx, rx, 2), noise, 2)
            gaps.append((dig - ana) / dig)
        mean_gaps.append(float(np.mean(gaps)))
    assert mean_gaps[0] > mean_gaps[1] > mean_gaps[2]
    assert mean_gaps[2] < 0.05
