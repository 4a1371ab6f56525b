"""System-matrix assembly tests, anchored on independent oracles."""

import numpy as np
import pytest

from fbmclink import channel as chmod
from fbmclink import sysmat
from fbmclink.filterbank import design_prototype
from fbmclink.oqam import SIGMA_X2_HALF


@pytest.fixture(scope="module")
def small_system():
    proto = design_prototype(32, 4)
    real = chmod.generate_bu_channel(np.random.default_rng(42), f_s=1.92e6, L_ch=14)
    return proto, real


class TestConvolutionMatrix:
    def test_unit_filter_gives_identity(self):
        assert np.array_equal(sysmat.convolution_matrix(np.array([1.0]), 3), np.eye(3))

    def test_two_tap_layout(self):
        T = sysmat.convolution_matrix(np.array([1.0, 2.0]), 2)
        assert T.tolist() == [[1.0, 2.0, 0.0], [0.0, 1.0, 2.0]]

    def test_matches_sliding_inner_product_oracle(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal(5)
        rows = 4
        T = sysmat.convolution_matrix(g, rows)
        window = rng.standard_normal(g.size + rows - 1)  # most recent first
        got = T @ window
        for p in range(rows):
            expect = sum(g[i] * window[p + i] for i in range(g.size))
            assert got[p] == pytest.approx(expect, abs=1e-12)

    def test_empty_filter_rejected(self):
        with pytest.raises(ValueError):
            sysmat.convolution_matrix(np.array([]), 2)


class TestRealify:
    def test_real_matrix_on_unit_phase_columns(self):
        H = np.arange(6.0).reshape(2, 3)
        out = sysmat.realify(H, first_slot_real=True)
        # columns 0 and 2 keep phase 1: top holds H, bottom zero
        assert np.array_equal(out[:2, 0], H[:, 0])
        assert np.array_equal(out[2:, 0], np.zeros(2))
        # column 1 carries j: real part moves to the bottom block
        assert np.array_equal(out[:2, 1], np.zeros(2))
        assert np.array_equal(out[2:, 1], H[:, 1])

    def test_imaginary_matrix_swaps_blocks(self):
        H = 1j * np.arange(6.0).reshape(2, 3)
        out = sysmat.realify(H, first_slot_real=True)
        assert np.array_equal(out[:2, 0], np.zeros(2))
        assert np.array_equal(out[2:, 0], H[:, 0].imag)

    def test_bilinear_form_matches_complex_oracle(self):
        rng = np.random.default_rng(1)
        H = rng.standard_normal((4, 7)) + 1j * rng.standard_normal((4, 7))
        x = rng.standard_normal(7)
        f = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        fbar = np.concatenate([f.real, f.imag])
        for first_real in (True, False):
            Hbar = sysmat.realify(H, first_slot_real=first_real)
            J = sysmat.phase_diag(first_real, 7)
            oracle = np.real(np.conj(f) @ (H @ (J * x)))
            assert fbar @ Hbar @ x == pytest.approx(oracle, abs=1e-12)


class TestGamma:
    def test_identity_noise_map(self):
        out = sysmat.build_gamma(np.eye(3))
        assert np.array_equal(out, np.eye(6))

    def test_gram_is_symmetric_psd(self, small_system):
        proto, real = small_system
        S = sysmat.assemble(proto, real, 10, 5, 4, 2)
        gram = S.gram_noise
        assert np.allclose(gram, gram.T)
        assert np.linalg.eigvalsh(gram).min() > -1e-12

    def test_filtered_noise_covariance_monte_carlo(self, small_system):
        """The realified noise Gram must reproduce the covariance of actual
        analysis-bank noise windows."""
        proto, real = small_system
        L_f = 3
        S = sysmat.assemble(proto, real, 9, 8, L_f, 0)
        rng = np.random.default_rng(2)
        sigma_eta2 = 0.8
        n = 400_000
        noise = np.sqrt(sigma_eta2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        filtered = np.convolve(noise, proto.modulated(9))[::16]
        # windows [u[n], u[n-1], u[n-2]] stacked re over im
        cols = []
        for p in range(L_f):
            cols.append(filtered[L_f - 1 - p:filtered.size - p])
        u = np.array(cols[::-1])  # row p = u[n-p]
        w = np.vstack([u.real, u.imag])
        emp = w @ w.T / w.shape[1]
        model = 0.5 * sigma_eta2 * S.gram_noise
        scale = np.abs(model).max()
        assert np.max(np.abs(emp - model)) < 0.02 * scale

    def test_mean_branch_variance_matches_trace(self, small_system):
        proto, real = small_system
        S = sysmat.assemble(proto, real, 9, 8, 3, 0)
        sigma_eta2 = 0.6
        per_branch = 0.5 * sigma_eta2 * np.trace(S.gram_noise) / (2 * S.L_f)
        # each row of the noise map holds a full copy of h_k: unit energy
        assert per_branch == pytest.approx(0.5 * sigma_eta2, rel=1e-9)


class TestOverlap:
    def test_middle_case(self):
        # L = L_f + N - nu - 2 = 1 + 2 - 0 - 2 = 1 = L_b
        out = sysmat.overlap_matrix(n_window=2, L_b=1, nu=0)
        assert out.tolist() == [[0.0], [1.0]]

    def test_wide_case_layout(self):
        out = sysmat.overlap_matrix(n_window=7, L_b=2, nu=1)
        expect = np.zeros((7, 2))
        expect[2, 0] = 1.0
        expect[3, 1] = 1.0
        assert np.array_equal(out, expect)

    def test_case_selection_matches_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            L_f = int(rng.integers(1, 6))
            N = int(rng.integers(1, 8))
            L_b = int(rng.integers(1, 6))
            n_window = N + L_f - 1
            nu = int(rng.integers(0, n_window))
            got = sysmat.overlap_matrix(n_window, L_b, nu)
            # brute force: windows x'[n-i] and x'[n-nu-1-j] overlap when
            # i == nu + 1 + j
            expect = np.zeros((n_window, L_b))
            for i in range(n_window):
                for j in range(L_b):
                    if i == nu + 1 + j:
                        expect[i, j] = 1.0
            assert np.array_equal(got, expect)

    def test_input_covariance_matches_sampling_oracle(self):
        rng = np.random.default_rng(4)
        L_f, N, L_b, nu = 3, 4, 3, 2
        n_window = N + L_f - 1
        ups = sysmat.overlap_matrix(n_window, L_b, nu)
        psi = SIGMA_X2_HALF * np.block([
            [np.eye(n_window), ups], [ups.T, np.eye(L_b)]])
        seq = rng.choice([-3.0, -1.0, 1.0, 3.0], size=300_000) / np.sqrt(10)
        start = n_window + nu + L_b
        rows = []
        for n in range(start, seq.size, 7):
            top = seq[n - n_window + 1:n + 1][::-1]
            bottom = seq[n - nu - L_b:n - nu][::-1]
            rows.append(np.concatenate([top, bottom]))
        x1 = np.array(rows)
        emp = x1.T @ x1 / x1.shape[0]
        assert np.max(np.abs(emp - psi)) < 0.02 * SIGMA_X2_HALF


class TestAssembly:
    def test_block_shapes_and_structure(self, small_system):
        proto, real = small_system
        L_f, L_b, nu, k = 4, 2, 6, 11
        S = sysmat.assemble(proto, real, k, nu, L_f, L_b)
        n_window = S.N + L_f - 1
        assert S.Hbar_kk.shape == (2 * L_f, n_window)
        assert S.A.shape == (2 * L_f + L_b, n_window + L_b)
        assert S.B.shape == (2 * L_f + L_b, 2 * n_window)
        assert S.Psi.shape == (n_window + L_b, n_window + L_b)
        assert np.array_equal(S.A[2 * L_f:, n_window:], -np.eye(L_b))
        assert not S.B[2 * L_f:].any()
        assert not S.Xi[2 * L_f:].any()
        # noise map columns: (L_f-1)*M/2 + L_p, realified to twice that
        assert S.Gamma.shape == (2 * L_f, 2 * ((L_f - 1) * 16 + proto.length))

    def test_no_feedback_collapses_blocks(self, small_system):
        proto, real = small_system
        S = sysmat.assemble(proto, real, 11, 6, 4, 0)
        assert np.array_equal(S.A, S.Hbar_kk)
        assert np.array_equal(S.Psi, SIGMA_X2_HALF * np.eye(S.n_window))

    def test_guard_edges_zero_missing_neighbor(self, small_system):
        proto, real = small_system
        used = set(range(10, 14))
        S = sysmat.assemble(proto, real, 10, 6, 4, 2, used_set=used)
        assert not S.Hbar_km1.any()
        assert S.Hbar_kp1.any()

    def test_psi_psd_and_normal_matrix_spd(self, small_system):
        proto, real = small_system
        S = sysmat.assemble(proto, real, 11, 6, 4, 2)
        assert np.linalg.eigvalsh(S.Psi).min() > -1e-12
        np.linalg.cholesky(S.normal_matrix(0.1))

    def test_latency_out_of_range_rejected(self, small_system):
        proto, real = small_system
        with pytest.raises(ValueError):
            sysmat.assemble(proto, real, 11, 99, 4, 2)

    def test_with_latency_matches_fresh_assembly(self, small_system):
        proto, real = small_system
        S0 = sysmat.assemble(proto, real, 11, 3, 4, 2)
        S7 = sysmat.with_latency(S0, 7)
        fresh = sysmat.assemble(proto, real, 11, 7, 4, 2)
        assert np.array_equal(S7.Psi, fresh.Psi)
        assert np.array_equal(S7.e_target, fresh.e_target)

    def test_matrix_csv_dump(self, small_system, tmp_path):
        proto, real = small_system
        S = sysmat.assemble(proto, real, 11, 6, 4, 2)
        path = tmp_path / "a.csv"
        S.dump_csv("A", path)
        assert np.allclose(np.loadtxt(path, delimiter=","), S.A)


class TestModelConsistency:
    def test_equalized_sample_matches_complex_oracle(self, small_system):
        """w'(A x1 + B x2 + Xi noise) must equal the end-to-end complex
        computation of one equalized sample."""
        proto, real = small_system
        rng = np.random.default_rng(5)
        L_f, L_b, nu, k = 5, 3, 9, 11
        used = set(range(9, 15))
        S = sysmat.assemble(proto, real, k, nu, L_f, L_b, used_set=used)
        n_window = S.n_window
        w = rng.standard_normal(2 * L_f + L_b)
        f2 = w[:L_f] + 1j * w[L_f:2 * L_f]
        b = w[2 * L_f:]
        x_own = rng.standard_normal(n_window)
        x_fb = rng.standard_normal(L_b)
        x_m1 = rng.standard_normal(n_window)
        x_p1 = rng.standard_normal(n_window)
        eta = rng.standard_normal(S.Gamma.shape[1] // 2) \
            + 1j * rng.standard_normal(S.Gamma.shape[1] // 2)

        lhs = w @ (S.A @ np.concatenate([x_own, x_fb])
                   + S.B @ np.concatenate([x_m1, x_p1])
                   + S.Xi @ np.concatenate([eta.real, eta.imag]))

        Jo = sysmat.phase_diag(True, n_window)
        Je = sysmat.phase_diag(False, n_window)
        y_win = (sysmat.convolution_matrix(chmod.total_subchannel_response(proto, k, k, real), L_f) @ (Jo * x_own)
                 + sysmat.convolution_matrix(chmod.total_subchannel_response(proto, k - 1, k, real), L_f) @ (Je * x_m1)
                 + sysmat.convolution_matrix(chmod.total_subchannel_response(proto, k + 1, k, real), L_f) @ (Je * x_p1)
                 + sysmat.noise_conv_matrix(proto.modulated(k), L_f, 16) @ eta)
        rhs = np.real(np.conj(f2) @ y_win) - b @ x_fb
        assert lhs == pytest.approx(rhs, abs=1e-10)
