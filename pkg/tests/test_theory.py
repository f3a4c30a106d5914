import math

import mpmath
import pytest

from microhop.theory import cfs_ser_theory, crossing_db, esn0_at_ser, ser_noncoherent_orthogonal


def series_oracle(M, snr):
    """Exact alternating-sum form, evaluated with enough digits to survive cancellation."""
    with mpmath.workdps(120):
        s = mpmath.mpf(0)
        snr = mpmath.mpf(snr)
        for k in range(1, M):
            s += (-1) ** (k + 1) * mpmath.binomial(M - 1, k) / (k + 1) * mpmath.e ** (-k * snr / (k + 1))
        return float(s)


@pytest.mark.parametrize("M", [2, 8, 17, 131])
@pytest.mark.parametrize("snr_db", [0.0, 6.0, 10.0, 13.0])
def test_quadrature_matches_series(M, snr_db):
    snr = 10 ** (snr_db / 10)
    oracle = series_oracle(M, snr)
    assert ser_noncoherent_orthogonal(M, snr) == pytest.approx(oracle, rel=1e-6, abs=1e-15)


def test_binary_closed_form():
    for snr in (0.5, 2.0, 9.0):
        assert ser_noncoherent_orthogonal(2, snr) == pytest.approx(0.5 * math.exp(-snr / 2))


def test_limits_and_monotonicity():
    assert ser_noncoherent_orthogonal(131, 0.0) == pytest.approx(130 / 131, rel=1e-6)
    vals = [cfs_ser_theory(131, e) for e in range(-16, -4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_esn0_at_ser_and_crossing():
    e = esn0_at_ser(131, 1e-2)
    assert cfs_ser_theory(131, e) == pytest.approx(1e-2, rel=1e-4)
    assert esn0_at_ser(257, 1e-2) < e
    xs = [-11.0, -10.0, -9.0, -8.0]
    ys = [cfs_ser_theory(131, x) for x in xs]
    assert crossing_db(xs, ys, 1e-2) == pytest.approx(e, abs=0.05)
    assert math.isnan(crossing_db([0.0, 1.0], [0.5, 0.4], 1e-2))
