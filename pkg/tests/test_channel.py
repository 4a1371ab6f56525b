"""Multipath channel and total-response tests."""

import numpy as np
import pytest

from fbmclink import channel as ch
from fbmclink.filterbank import design_prototype


def _direct_convolution(a, b):
    """Independent O(n*m) oracle."""
    out = np.zeros(len(a) + len(b) - 1, dtype=complex)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


class TestBuChannel:
    def test_paper_scale_realization_shape(self):
        rng = np.random.default_rng(0)
        real = ch.generate_bu_channel(rng, f_s=15.36e6, L_ch=110)
        assert real.length == 110
        assert np.count_nonzero(real.taps) == 6

    def test_unit_energy(self):
        rng = np.random.default_rng(1)
        real = ch.generate_bu_channel(rng, f_s=15.36e6, L_ch=110)
        assert np.sum(np.abs(real.taps) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_same_seed_same_realization(self):
        a = ch.generate_bu_channel(np.random.default_rng(7), 15.36e6, 110)
        b = ch.generate_bu_channel(np.random.default_rng(7), 15.36e6, 110)
        assert np.array_equal(a.taps, b.taps)

    def test_delay_exceeding_window_rejected(self):
        with pytest.raises(ValueError):
            ch.generate_bu_channel(np.random.default_rng(0), f_s=15.36e6, L_ch=50)

    def test_csv_round_trip(self, tmp_path):
        real = ch.generate_bu_channel(np.random.default_rng(3), 15.36e6, 110)
        path = tmp_path / "chan.csv"
        real.dump_csv(path)
        data = np.loadtxt(path, delimiter=",")
        assert np.allclose(data[:, 1] + 1j * data[:, 2], real.taps)


class TestApplyChannel:
    def test_identity_channel_is_transparent(self):
        rng = np.random.default_rng(2)
        sig = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        out = ch.apply_channel(sig, ch.ideal_channel(), 0.0)
        assert np.max(np.abs(out - sig)) < 1e-12

    def test_noise_variance_monte_carlo(self):
        rng = np.random.default_rng(3)
        out = ch.apply_channel(np.zeros(10**6, dtype=complex), ch.ideal_channel(), 1.0, rng)
        assert np.mean(np.abs(out) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_linearity_without_noise(self):
        rng = np.random.default_rng(4)
        real = ch.generate_bu_channel(rng, 15.36e6, 110)
        s1 = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        s2 = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        lhs = ch.apply_channel(3.0 * s1 + 2.0j * s2, real, 0.0)
        rhs = 3.0 * ch.apply_channel(s1, real, 0.0) + 2.0j * ch.apply_channel(s2, real, 0.0)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_matches_direct_convolution_oracle(self):
        rng = np.random.default_rng(5)
        real = ch.generate_bu_channel(rng, 2e6, 16)
        sig = rng.standard_normal(150) + 1j * rng.standard_normal(150)
        out = ch.apply_channel(sig, real, 0.0)
        assert np.max(np.abs(out - _direct_convolution(sig, real.taps))) < 1e-12

    def test_negative_noise_variance_rejected(self):
        with pytest.raises(ValueError):
            ch.apply_channel(np.zeros(4), ch.ideal_channel(), -1.0)

    def test_missing_rng_rejected(self):
        with pytest.raises(ValueError):
            ch.apply_channel(np.zeros(4), ch.ideal_channel(), 0.5)


class TestTotalResponse:
    def test_paper_scale_length(self):
        # ceil((2*(1025-1) + 110) / 128) = ceil(2158/128) = 17
        assert ch.response_length(1025, 110, 256) == 17

    def test_desk_scale_length(self):
        # ceil((2*256 + 28) / 32) = ceil(540/32) = 17
        assert ch.response_length(257, 28, 64) == 17

    def test_response_matches_formula_length(self):
        proto = design_prototype(64, 4)
        real = ch.generate_bu_channel(np.random.default_rng(6), 3.84e6, 28)
        g = ch.total_subchannel_response(proto, 10, 10, real)
        assert g.size == 17

    def test_identity_channel_response_is_decimated_self_convolution(self):
        proto = design_prototype(32, 4)
        g = ch.total_subchannel_response(proto, 5, 5, ch.ideal_channel())
        h5 = proto.modulated(5)
        expect = np.convolve(h5, h5)[::16]
        assert np.max(np.abs(g - expect)) < 1e-14

    def test_adjacent_responses_are_weak_for_identity_channel(self):
        proto = design_prototype(32, 4)
        own = ch.total_subchannel_response(proto, 8, 8, ch.ideal_channel())
        lo = ch.total_subchannel_response(proto, 7, 8, ch.ideal_channel())
        hi = ch.total_subchannel_response(proto, 9, 8, ch.ideal_channel())
        assert np.linalg.norm(lo) < 0.6 * np.linalg.norm(own)
        assert np.linalg.norm(hi) < 0.6 * np.linalg.norm(own)

    def test_far_crossing_rejected(self):
        proto = design_prototype(32, 4)
        with pytest.raises(ValueError):
            ch.total_subchannel_response(proto, 5, 8, ch.ideal_channel())
