import numpy as np
import pytest

from mimo_papr import channel


def test_tap_moments():
    rng = np.random.default_rng(0)
    taps = channel.draw_taps(10, 10, 1000, rng)   # 1e5 entries
    assert abs(np.mean(np.abs(taps) ** 2) - 1.0) < 0.02
    assert abs(np.mean(taps.real)) < 0.02
    assert abs(np.mean(taps.imag)) < 0.02
    # per-dimension variance 1/2
    assert abs(np.var(taps.real) - 0.5) < 0.02


def test_taps_deterministic():
    a = channel.draw_taps(4, 8, 3, np.random.default_rng(5))
    b = channel.draw_taps(4, 8, 3, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_taps_validation():
    with pytest.raises(ValueError):
        channel.draw_taps(0, 4, 2, np.random.default_rng(0))


def test_single_tap_constant_modulus():
    rng = np.random.default_rng(2)
    taps = channel.draw_taps(3, 5, 1, rng)
    H = channel.freq_response(taps, 16)
    assert np.allclose(np.abs(H), np.abs(taps[0])[None, :, :], rtol=1e-12)


def test_tone_zero_is_plain_sum():
    rng = np.random.default_rng(3)
    taps = channel.draw_taps(2, 3, 5, rng)
    H = channel.freq_response(taps, 8)
    assert np.allclose(H[0], taps.sum(axis=0), atol=1e-14)


def test_freq_response_direct_oracle():
    # independent direct summation, scalar channel
    rng = np.random.default_rng(4)
    taps = channel.draw_taps(1, 1, 3, rng)
    N = 8
    H = channel.freq_response(taps, N)
    for n in range(N):
        ref = sum(taps[d - 1, 0, 0] * np.exp(-2j * np.pi * d * n / N)
                  for d in range(1, 4))
        assert abs(H[n, 0, 0] - ref) < 1e-14


def test_requires_d_at_most_n():
    taps = channel.draw_taps(1, 1, 9, np.random.default_rng(0))
    with pytest.raises(ValueError):
        channel.freq_response(taps, 8)


def test_parseval_over_tones():
    rng = np.random.default_rng(6)
    taps = channel.draw_taps(3, 4, 6, rng)
    N = 32
    H = channel.freq_response(taps, N)
    lhs = np.sum(np.abs(H) ** 2)
    rhs = N * np.sum(np.abs(taps) ** 2)
    assert abs(lhs - rhs) < 1e-10 * rhs


def test_dump_load_round_trip(tmp_path):
    taps = channel.draw_taps(2, 3, 4, np.random.default_rng(8))
    p_npz = tmp_path / "taps.npz"
    channel.save_taps_npz(p_npz, taps)
    assert np.array_equal(channel.load_taps_npz(p_npz), taps)
    p_json = tmp_path / "taps.json"
    channel.save_taps_json(p_json, taps)
    assert np.allclose(channel.load_taps_json(p_json), taps, rtol=0, atol=0)
