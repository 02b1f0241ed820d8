"""Rate and efficiency metrics.

Reference values are computed independently inside the tests: explicit
covariance loops, inv/det evaluation of the log-determinant, and the
closed-form rate of a one-path link.
"""

import math

import numpy as np
import pytest

from mmwsim.beamforming import digital_svd_pair
from mmwsim.channel import ArrayGeometry, assemble_channel, steering_vector
from mmwsim.metrics import PowerModel, ase, asee, disturbance_covariance

from conftest import dft_grid_angles, fake_realization, single_path_set


def _random_link(rng, n_rx, n_tx, n_streams):
    h = rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx))
    q, _ = np.linalg.qr(rng.standard_normal((n_tx, n_streams))
                        + 1j * rng.standard_normal((n_tx, n_streams)))
    d, _ = np.linalg.qr(rng.standard_normal((n_rx, n_streams))
                        + 1j * rng.standard_normal((n_rx, n_streams)))
    return fake_realization(h), q, d


# ------------------------------------------------------------- PowerModel


@pytest.mark.parametrize("kwargs", [
    {"transmit_power": 0.0},
    {"transmit_power": -1.0},
    {"transmit_power": math.inf},
    {"noise_variance": 0.0},
    {"noise_variance": -1e-9},
    {"per_antenna_circuit_power": -0.1},
    {"amp_inefficiency": 1.0},
    {"amp_inefficiency": 0.5},
])
def test_power_model_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        PowerModel(**kwargs)


def test_power_model_defaults_valid():
    power = PowerModel()
    assert power.transmit_power == 1.0
    assert power.amp_inefficiency == 2.0


# ------------------------------------------------------------ covariance


def test_single_user_covariance_is_noise_gram():
    rng = np.random.default_rng(3)
    ch, q, d = _random_link(rng, 8, 12, 2)
    power = PowerModel(noise_variance=0.3)
    cov = disturbance_covariance(0, [ch], [q], d, power, 2, 1)
    expected = 0.3 * (d.conj().T @ d)
    np.testing.assert_allclose(cov, 0.5 * (expected + expected.conj().T), atol=1e-12)


def test_covariance_matches_reference_loop():
    # Independent reference: thermal gram plus an explicit sum of
    # per-interferer outer products at per-stream power P/(K*M).
    rng = np.random.default_rng(5)
    n_users, n_streams = 3, 2
    links = [_random_link(rng, 6, 9, n_streams) for _ in range(n_users)]
    channels = [l[0] for l in links]
    precoders = [l[1] for l in links]
    postcoders = [l[2] for l in links]
    power = PowerModel(transmit_power=4.0, noise_variance=0.7)

    for k in range(n_users):
        expected = 0.7 * postcoders[k].conj().T @ postcoders[k]
        coef = 4.0 / (n_users * n_streams)
        for other in range(n_users):
            if other == k:
                continue
            cross = postcoders[k].conj().T @ channels[k].matrix @ precoders[other]
            expected = expected + coef * cross @ cross.conj().T
        expected = 0.5 * (expected + expected.conj().T)
        got = disturbance_covariance(k, channels, precoders, postcoders[k],
                                     power, n_streams, n_users)
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_covariance_rejects_collinear_postcoder():
    rng = np.random.default_rng(7)
    ch, q, d = _random_link(rng, 8, 12, 2)
    d_bad = np.stack([d[:, 0], d[:, 0]], axis=1)  # rank-deficient gram
    power = PowerModel(noise_variance=1e-9)
    with pytest.raises(ValueError, match="positive definite"):
        disturbance_covariance(0, [ch], [q], d_bad, power, 2, 1)


def test_covariance_user_index_validation():
    rng = np.random.default_rng(9)
    ch, q, d = _random_link(rng, 4, 6, 1)
    with pytest.raises(ValueError):
        disturbance_covariance(1, [ch], [q], d, PowerModel(), 1, 1)
    with pytest.raises(ValueError):
        disturbance_covariance(-1, [ch], [q], d, PowerModel(), 1, 1)


# -------------------------------------------------------------------- ase


def test_ase_single_path_closed_form():
    # One path, one stream: rate = log2(1 + P * N_T * N_R * L * |a|^2 / s2).
    rng = np.random.default_rng(11)
    tx, rx = ArrayGeometry(32), ArrayGeometry(8)
    for _ in range(20):
        gain = complex(rng.standard_normal(), rng.standard_normal())
        loss = float(rng.uniform(0.1, 2.0))
        dep = float(rng.uniform(-1.5, 1.5))
        arr = float(rng.uniform(-1.5, 1.5))
        ps = single_path_set(gain=gain, attenuation=loss, departure=dep, arrival=arr)
        channel = assemble_channel(ps, tx, rx)
        pair = digital_svd_pair(channel, 1)
        p_tx, noise = 2.5, 1e-6
        result = ase([channel], [pair.precoder], [pair.postcoder],
                     PowerModel(transmit_power=p_tx, noise_variance=noise), 1, 1)
        expected = math.log2(1.0 + p_tx * 32 * 8 * loss * abs(gain) ** 2 / noise)
        assert result.sum_ase == pytest.approx(expected, rel=1e-9)
        assert result.per_user_ase == [pytest.approx(expected, rel=1e-9)]


def test_ase_matches_direct_determinant():
    # Independent evaluation path: inv + det instead of Cholesky + slogdet.
    rng = np.random.default_rng(13)
    n_users, n_streams = 2, 3
    links = [_random_link(rng, 8, 12, n_streams) for _ in range(n_users)]
    channels = [l[0] for l in links]
    precoders = [l[1] for l in links]
    postcoders = [l[2] for l in links]
    power = PowerModel(transmit_power=3.0, noise_variance=0.05)

    result = ase(channels, precoders, postcoders, power, n_streams, n_users)
    coef = 3.0 / (n_users * n_streams)
    for k in range(n_users):
        cov = disturbance_covariance(k, channels, precoders, postcoders[k],
                                     power, n_streams, n_users)
        a = postcoders[k].conj().T @ channels[k].matrix @ precoders[k]
        gram = np.eye(n_streams) + coef * np.linalg.inv(cov) @ a @ a.conj().T
        expected = math.log2(abs(np.linalg.det(gram)))
        assert result.per_user_ase[k] == pytest.approx(expected, rel=1e-9)
    assert result.sum_ase == pytest.approx(sum(result.per_user_ase), rel=1e-12)


def test_ase_orthogonal_users_match_isolated_links():
    # Two users on orthogonal-grid beams see zero cross-talk, so the
    # two-user rate per user equals an isolated run at half the power.
    tx, rx = ArrayGeometry(32), ArrayGeometry(16)
    deps = dft_grid_angles(32, [2, 9])
    arrs = dft_grid_angles(16, [1, 5])
    channels, precoders, postcoders = [], [], []
    for dep, arr in zip(deps, arrs):
        ps = single_path_set(gain=1.3, attenuation=0.5, departure=dep, arrival=arr)
        ch = assemble_channel(ps, tx, rx)
        pair = digital_svd_pair(ch, 1)
        channels.append(ch)
        precoders.append(pair.precoder)
        postcoders.append(pair.postcoder)

    joint = ase(channels, precoders, postcoders,
                PowerModel(transmit_power=2.0, noise_variance=1e-4), 1, 2)
    for k in range(2):
        cov = disturbance_covariance(k, channels, precoders, postcoders[k],
                                     PowerModel(transmit_power=2.0, noise_variance=1e-4),
                                     1, 2)
        assert abs(cov[0, 0] - 1e-4) <= 1e-9  # interference term vanished
        isolated = ase([channels[k]], [precoders[k]], [postcoders[k]],
                       PowerModel(transmit_power=1.0, noise_variance=1e-4), 1, 1)
        assert joint.per_user_ase[k] == pytest.approx(isolated.sum_ase, abs=1e-6)


def test_ase_interference_reduces_rate():
    # Same beam for both users: full cross-talk must cost rate relative to
    # the isolated half-power link.
    tx, rx = ArrayGeometry(32), ArrayGeometry(16)
    ps = single_path_set(gain=1.0, attenuation=1.0, departure=0.3, arrival=-0.2)
    ch = assemble_channel(ps, tx, rx)
    pair = digital_svd_pair(ch, 1)
    channels = [ch, ch]
    precoders = [pair.precoder, pair.precoder]
    postcoders = [pair.postcoder, pair.postcoder]
    joint = ase(channels, precoders, postcoders,
                PowerModel(transmit_power=2.0, noise_variance=1e-4), 1, 2)
    isolated = ase([ch], [pair.precoder], [pair.postcoder],
                   PowerModel(transmit_power=1.0, noise_variance=1e-4), 1, 1)
    assert joint.per_user_ase[0] < isolated.sum_ase - 1.0


def test_ase_monotone_in_transmit_power():
    rng = np.random.default_rng(17)
    ch, q, d = _random_link(rng, 8, 12, 2)
    rates = [
        ase([ch], [q], [d], PowerModel(transmit_power=p, noise_variance=1e-3),
            2, 1).sum_ase
        for p in (0.1, 1.0, 10.0, 100.0)
    ]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_ase_zero_channel_rate_is_zero():
    q, _ = np.linalg.qr(np.eye(6, 2, dtype=complex))
    d, _ = np.linalg.qr(np.eye(4, 2, dtype=complex))
    result = ase([fake_realization(np.zeros((4, 6), dtype=complex))], [q], [d],
                 PowerModel(), 2, 1)
    assert result.sum_ase == 0.0
    assert result.per_user_ase == [0.0]


def test_ase_shape_validation():
    rng = np.random.default_rng(19)
    ch, q, d = _random_link(rng, 4, 6, 2)
    with pytest.raises(ValueError):
        ase([ch], [q], [d], PowerModel(), 2, 2)  # list lengths != n_users
    with pytest.raises(ValueError):
        ase([ch], [q[:, :1]], [d], PowerModel(), 2, 1)  # wrong stream count
    with pytest.raises(ValueError):
        ase([ch], [q], [d[:3]], PowerModel(), 2, 1)  # wrong antenna count
    with pytest.raises(ValueError):
        ase([ch], [q], [d], PowerModel(), 0, 1)


# ------------------------------------------------------------------- asee


def test_asee_frozen_value():
    # 10 bits over 100 antennas at 0.5 W each plus 2 * 5 W amplifier draw:
    # 10 / 60 bits per joule per hertz.
    power = PowerModel(transmit_power=5.0, noise_variance=1.0,
                       per_antenna_circuit_power=0.5, amp_inefficiency=2.0)
    assert asee(10.0, 100, power) == pytest.approx(10.0 / 60.0, rel=1e-12)


def test_asee_no_circuit_power():
    power = PowerModel(transmit_power=4.0, noise_variance=1.0,
                       per_antenna_circuit_power=0.0, amp_inefficiency=2.0)
    assert asee(16.0, 1000, power) == pytest.approx(2.0, rel=1e-12)


def test_asee_decreases_with_antenna_count_at_fixed_rate():
    power = PowerModel(transmit_power=1.0, noise_variance=1.0,
                       per_antenna_circuit_power=0.1, amp_inefficiency=2.0)
    values = [asee(10.0, n, power) for n in (10, 100, 1000)]
    assert values[0] > values[1] > values[2]


def test_asee_validation():
    power = PowerModel()
    with pytest.raises(ValueError):
        asee(-1.0, 10, power)
    with pytest.raises(ValueError):
        asee(math.nan, 10, power)
    with pytest.raises(ValueError):
        asee(5.0, 0, power)
