from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csrwlan.config import ConfigError, McsEntry, MacTiming, default_radio, thermal_noise_dbm
from csrwlan.deployment import AccessPoint, Deployment, PairId, Station
from csrwlan.radio import (
    ampdu_packets,
    db_to_linear,
    linear_to_db,
    link_budget,
    mcs_rows,
    path_loss,
    rssi,
    select_mcs,
    sinr,
)

# Frozen from a 40-digit mpmath evaluation of the TGax formula
# (fc = 6 GHz, breakpoint 3 m, one wall, linear-domain power sums).
PL_1M = 55.0088001734407
PL_3M = 64.551225267834
PL_10M = 82.8519813526458
NOISE_80MHZ = -87.96910013008056
# STA 1 m from AP1 on the side facing AP2, square of side 10 m
SINR_ALL_FOUR = 23.3965598309006
SINR_WITH_AP2 = 26.2379899463635
SNR_ALONE = 56.9602999566398


def _square(radio, sta=(1.0, 0.0)):
    aps = (AccessPoint(1, 0, 0), AccessPoint(2, 10, 0), AccessPoint(3, 10, 10), AccessPoint(4, 0, 10))
    stas = (Station(1, *sta, 1), Station(2, 9, 1, 2), Station(3, 9, 9, 3), Station(4, 1, 9, 4))
    return Deployment(aps, stas, radio)


class TestPathLoss:
    def test_one_meter(self, radio):
        assert path_loss(1.0, radio) == pytest.approx(PL_1M, abs=1e-9)
        assert round(path_loss(1.0, radio), 3) == 55.009

    def test_ten_meters(self, radio):
        assert path_loss(10.0, radio) == pytest.approx(PL_10M, abs=1e-9)

    def test_breakpoint_continuity(self, radio):
        at = path_loss(3.0, radio)
        assert at == pytest.approx(PL_3M, abs=1e-9)
        assert path_loss(3.0 + 1e-9, radio) == pytest.approx(at, abs=1e-6)
        assert path_loss(3.0 - 1e-9, radio) == pytest.approx(at, abs=1e-6)

    def test_clamped_below_one_meter(self, radio):
        assert path_loss(0.0, radio) == path_loss(1.0, radio)
        assert path_loss(0.3, radio) == path_loss(1.0, radio)

    def test_vectorized_matches_scalar(self, radio):
        ds = np.array([0.5, 1.0, 2.9, 3.0, 7.5, 40.0])
        np.testing.assert_array_equal(path_loss(ds, radio), [path_loss(float(d), radio) for d in ds])

    @given(st.floats(1.0, 500.0), st.floats(1.0, 500.0))
    def test_non_decreasing(self, a, b):
        radio = default_radio()
        lo, hi = sorted((a, b))
        assert path_loss(lo, radio) <= path_loss(hi, radio)


class TestRssi:
    def test_examples(self, radio):
        assert rssi((0, 0), (1, 0), radio) == pytest.approx(24 - PL_1M, abs=1e-9)
        assert round(rssi((0, 0), (1, 0), radio), 3) == -31.009
        assert rssi((0, 0), (10, 0), radio) == pytest.approx(24 - PL_10M, abs=1e-9)

    def test_coincident_points(self, radio):
        assert rssi((2, 3), (2, 3), radio) == rssi((0, 0), (0, 1), radio)


class TestNoise:
    def test_thermal_noise(self, radio):
        assert thermal_noise_dbm(80, 7) == pytest.approx(NOISE_80MHZ, abs=1e-9)
        assert radio.noise_floor_dbm == pytest.approx(NOISE_80MHZ, abs=1e-9)


class TestSinr:
    def test_alone_is_snr(self, radio):
        dep = _square(radio)
        expected = rssi((0, 0), (1, 0), radio) - radio.noise_floor_dbm
        assert sinr(PairId(1, 1), {1}, dep) == pytest.approx(expected, abs=1e-9)
        assert sinr(PairId(1, 1), {1}, dep) == pytest.approx(SNR_ALONE, abs=1e-9)

    def test_square_all_active(self, radio):
        dep = _square(radio)
        assert sinr(PairId(1, 1), {1, 2, 3, 4}, dep) == pytest.approx(SINR_ALL_FOUR, abs=1e-9)
        assert sinr(PairId(1, 1), {1, 2}, dep) == pytest.approx(SINR_WITH_AP2, abs=1e-9)

    def test_equidistant_interferer_gives_zero_db(self):
        # negligible noise, so the ratio is set by the two equal powers
        radio = replace(default_radio(), noise_floor_dbm=-250.0)
        aps = (AccessPoint(1, -5, 0), AccessPoint(2, 5, 0))
        stas = (Station(1, 0, 0, 1), Station(2, 5, 1, 2))
        dep = Deployment(aps, stas, radio)
        assert sinr(PairId(1, 1), {1, 2}, dep) == pytest.approx(0.0, abs=1e-9)

    def test_target_must_be_active(self, radio):
        with pytest.raises(ValueError):
            sinr(PairId(1, 1), {2, 3}, _square(radio))

    @given(st.sets(st.sampled_from([2, 3, 4])), st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=60)
    def test_more_interferers_never_help(self, extra, dx, dy):
        radio = default_radio()
        dep = _square(radio, sta=(dx, dy))
        base = sinr(PairId(1, 1), {1}, dep)
        s = sinr(PairId(1, 1), {1} | extra, dep)
        assert s <= base + 1e-12
        for a in extra:
            assert s <= sinr(PairId(1, 1), ({1} | extra) - {a}, dep) + 1e-12


class TestMcs:
    def test_below_table(self, radio):
        assert select_mcs(11.999, radio) is None
        assert mcs_rows(11.999, radio) == -1

    def test_exact_threshold_selects(self, radio):
        for e in radio.mcs_table:
            assert select_mcs(e.min_sinr_db, radio) == e.index
        assert list(mcs_rows(np.array(radio.thresholds_db), radio)) == list(range(12))

    def test_saturation(self, radio):
        assert select_mcs(80.0, radio) == 11

    @given(st.floats(-20, 90), st.floats(-20, 90))
    def test_monotone_and_vector_agrees(self, a, b):
        radio = default_radio()
        lo, hi = sorted((a, b))
        ia, ib = select_mcs(lo, radio), select_mcs(hi, radio)
        assert (-1 if ia is None else ia) <= (-1 if ib is None else ib)
        assert int(mcs_rows(lo, radio)) == (-1 if ia is None else ia)

    def test_table_must_be_sorted(self):
        rows = [McsEntry(0, 10.0, 2e6), McsEntry(1, 9.0, 3e6)]
        with pytest.raises(ConfigError):
            replace(default_radio(), mcs_table=tuple(rows))

    def test_link_budget(self, radio):
        lb = link_budget((0, 0), (1, 0), radio)
        assert lb.mcs == 11
        assert lb.rate_bps == radio.mcs_table[-1].data_rate_bps
        far = link_budget((0, 0), (400, 0), radio)
        assert far.mcs is None and far.rate_bps == 0.0


class TestAmpdu:
    def test_t_data(self, timing):
        assert timing.t_data(True) == pytest.approx(5e-3 - (286 + 32 + 100 + 34 + 9) * 1e-6, abs=1e-15)
        assert timing.t_data(False) == pytest.approx(5e-3 - (32 + 100 + 34 + 9) * 1e-6, abs=1e-15)

    def test_unit_rate(self, timing):
        rate = 8 * 1500 / timing.t_data()
        assert ampdu_packets(0, timing, rate_bps=rate) == 1
        assert ampdu_packets(0, timing, rate_bps=rate * 0.999) == 0

    @given(st.floats(1e5, 2e9))
    def test_doubling(self, rate):
        mac = MacTiming()
        n = ampdu_packets(0, mac, rate_bps=rate)
        assert ampdu_packets(0, mac, rate_bps=2 * rate) in (2 * n, 2 * n + 1)

    @given(st.floats(1e5, 2e9), st.floats(1e5, 2e9))
    def test_monotone_in_rate(self, a, b):
        mac = MacTiming()
        lo, hi = sorted((a, b))
        assert ampdu_packets(0, mac, rate_bps=lo) <= ampdu_packets(0, mac, rate_bps=hi)

    @given(st.floats(2e-3, 20e-3), st.floats(2e-3, 20e-3))
    def test_monotone_in_share(self, a, b):
        lo, hi = sorted((a, b))
        n_lo = ampdu_packets(0, MacTiming(t_share=lo), rate_bps=6e8)
        n_hi = ampdu_packets(0, MacTiming(t_share=hi), rate_bps=6e8)
        assert n_lo <= n_hi

    def test_table_scale(self, radio, timing):
        # high MCS gives a few hundred frames per TXOP
        n = ampdu_packets(11, timing, cfg=radio)
        assert 100 <= n <= 1000
        assert n == 454
        assert ampdu_packets(11, timing, cfg=radio, with_mapc=False) == 482

    def test_cap(self, radio):
        assert ampdu_packets(11, MacTiming(max_ampdu=256), cfg=radio) == 256

    def test_no_airtime(self):
        with pytest.raises(ValueError):
            ampdu_packets(0, MacTiming(t_share=400e-6, t_mapc=0.0), rate_bps=1e8, with_mapc=True)


@given(st.floats(-150, 150))
def test_db_round_trip(x):
    assert float(linear_to_db(db_to_linear(x))) == pytest.approx(x, rel=1e-9, abs=1e-12)
    y = float(db_to_linear(x))
    assert float(db_to_linear(linear_to_db(y))) == pytest.approx(y, rel=1e-9)
