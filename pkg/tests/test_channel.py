import json
import math

import numpy as np
import pytest

from microhop import spectral
from microhop.channel import (
    ChannelSpec,
    add_awgn,
    apply_cfo,
    apply_delay,
    ebn0_from_esn0,
    esn0_from_ebn0,
    impair,
    mix,
    noise_variance,
    trial_rng,
)
from microhop.hopping import zc_closed_form
from microhop.modem import demodulate_cfs


def test_delay_modes():
    x = np.arange(1, 18, dtype=complex)
    assert np.array_equal(apply_delay(x, 0), x)
    assert np.array_equal(apply_delay(x, 3)[:3], np.zeros(3))
    assert np.array_equal(apply_delay(x, 17, "circular"), x)
    blocks = apply_delay(np.arange(10, dtype=complex), 1, "circular", window=5)
    assert blocks.real.tolist() == [4, 0, 1, 2, 3, 9, 5, 6, 7, 8]
    with pytest.raises(ValueError):
        apply_delay(x, -1)


def test_cfo_moves_pilot_peak():
    P1 = 31
    z = zc_closed_form(P1, 3).samples
    assert np.array_equal(apply_cfo(z, 0.0), z)
    for k in range(-15, 16):
        y = apply_cfo(z, k / P1)
        assert np.allclose(np.abs(y), np.abs(z))
        assert spectral.peak_search(spectral.freq_correlation(y, z))[0] == k % P1


def test_awgn_identity_and_reproducible():
    x = zc_closed_form(131, 3).samples
    assert np.array_equal(add_awgn(x, None), x)
    assert np.array_equal(add_awgn(x, math.inf), x)
    assert np.array_equal(add_awgn(x, 3.0, seed=5), add_awgn(x, 3.0, seed=5))
    assert not np.array_equal(add_awgn(x, 3.0, seed=5), add_awgn(x, 3.0, seed=6))
    with pytest.raises(ValueError):
        add_awgn(2 * x, 0.0)


@pytest.mark.parametrize("esn0", [-10.0, 0.0, 7.0])
def test_awgn_variance(esn0):
    x = np.ones(100_000, dtype=complex)
    n = add_awgn(x, esn0, seed=1) - x
    var = np.mean(np.abs(n) ** 2)
    assert abs(var / noise_variance(esn0) - 1) < 0.03
    # circular: equal power in I and Q
    assert abs(np.var(n.real) / np.var(n.imag) - 1) < 0.03


def test_ebn0_bookkeeping():
    assert math.isclose(ebn0_from_esn0(0.0, 131, 7), 10 * math.log10(131 / 7))
    assert math.isclose(esn0_from_ebn0(ebn0_from_esn0(-3.0, 257, 8), 257, 8), -3.0)


def test_trial_rng_split():
    a = trial_rng(1, 0).standard_normal(4)
    assert np.array_equal(a, trial_rng(1, 0).standard_normal(4))
    assert not np.array_equal(a, trial_rng(1, 1).standard_normal(4))
    assert not np.array_equal(a, trial_rng(2, 0).standard_normal(4))


def test_channelspec_json():
    spec = ChannelSpec(5, 0.01, None, -3.0, 9)
    d = json.loads(json.dumps(spec.to_dict()))
    assert d["esn0_db"] == "noiseless"
    assert ChannelSpec.from_dict(d) == spec
    with pytest.raises(ValueError):
        ChannelSpec(-1)
    with pytest.raises(ValueError):
        ChannelSpec(esn0_db=math.nan)


def test_impair_order_invariance_of_peaks():
    P = 31
    z = np.tile(zc_closed_form(P, 3).samples, 3)
    d, nu = 7, 4 / P
    a = apply_cfo(apply_delay(z, d), nu)
    b = apply_delay(apply_cfo(z, nu), d)
    ratio = a[d:] / b[d:]
    assert np.max(np.abs(ratio - ratio[0])) < 1e-9
    ca = np.abs(spectral.freq_correlation(a[P:2 * P], z[:P]))
    cb = np.abs(spectral.freq_correlation(b[P:2 * P], z[:P]))
    assert np.max(np.abs(ca - cb)) < 1e-9


def test_impair_deterministic():
    z = zc_closed_form(31, 3).samples
    spec = ChannelSpec(3, 0.02, 0.0, -2.0, 11)
    assert np.array_equal(impair(z, spec), impair(z, spec))
    assert len(impair(z, spec)) == 34


def test_mix_single_user_and_linearity():
    P = 257
    z3, z5 = zc_closed_form(P, 3).samples, zc_closed_form(P, 5).samples
    s = ChannelSpec(2, 1 / P)
    assert np.allclose(mix([(z3, s)]), impair(z3, s))
    both = mix([(z3, s), (z5, ChannelSpec())])
    assert np.allclose(both[:len(z5)] - impair(z3, s)[:len(z5)], z5)


def test_mix_two_users_separate():
    P = 257
    n = np.arange(P)
    z3, z5 = zc_closed_form(P, 3).samples, zc_closed_form(P, 5).samples
    rng = np.random.default_rng(2)
    for _ in range(100):
        d3, d5 = rng.integers(0, P, 2)
        u3 = z3 * np.exp(2j * np.pi * d3 * (n + 1) / P)
        u5 = z5 * np.exp(2j * np.pi * d5 * (n + 1) / P)
        rx = mix([(u3, ChannelSpec()), (u5, ChannelSpec())])
        r3, r5 = demodulate_cfs(rx, z3), demodulate_cfs(rx, z5)
        assert (r3.data, r5.data) == (d3, d5)
        assert r3.peak_magnitude >= P - math.sqrt(P) - 1e-9
