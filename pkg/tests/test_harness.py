"""Configuration, Monte-Carlo cells, sweep, and CSV tests."""

import numpy as np
import pytest

from fbmclink import channel as chmod
from fbmclink import harness


def micro_config(**overrides):
    """Tiny but complete configuration for fast end-to-end sweeps."""
    base = dict(m=32, m_u=12, f_s=15.36e6 * 32 / 256, l_ch=14,
                block_len=120, n_channels=2, ebn0_db=(12.0,),
                designs=("dfe-ul",), master_seed=5, nu=8)
    base.update(overrides)
    return harness.SimConfig(**base)


class TestNoiseConvention:
    def test_reference_point(self):
        # 0 dB, 16-QAM, fully used band: sigma_x^2 / 4
        assert harness.noise_variance_from_ebn0(0.0, 16, 1.0, 64, 64) == pytest.approx(0.25)

    def test_three_db_halves_noise(self):
        a = harness.noise_variance_from_ebn0(10.0, 16, 1.0, 256, 210)
        b = harness.noise_variance_from_ebn0(10.0 + 10 * np.log10(2), 16, 1.0, 256, 210)
        assert b == pytest.approx(a / 2)

    def test_vanishes_at_high_ebn0(self):
        assert harness.noise_variance_from_ebn0(200.0, 16, 1.0, 256, 210) < 1e-20

    def test_guard_band_fraction_enters_linearly(self):
        full = harness.noise_variance_from_ebn0(5.0, 16, 1.0, 256, 256)
        part = harness.noise_variance_from_ebn0(5.0, 16, 1.0, 256, 128)
        assert part == pytest.approx(full / 2)


class TestConfig:
    def test_defaults_are_paper_scale(self):
        cfg = harness.SimConfig()
        assert (cfg.m, cfg.m_u, cfg.l_f, cfg.l_b, cfg.l_lin) == (256, 210, 7, 4, 9)
        assert cfg.tau_value == pytest.approx(8 / np.sqrt(10))

    def test_desk_scale_keeps_subcarrier_spacing(self):
        cfg = harness.desk_scale()
        assert cfg.m == 64 and cfg.m_u == 48
        assert cfg.f_s / cfg.m == pytest.approx(15.36e6 / 256)

    def test_used_band_is_centered(self):
        cfg = harness.desk_scale()
        assert cfg.k_abs[0] == (64 - 48) // 2
        assert cfg.k_abs.size == 48

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            harness.SimConfig(m_u=300)
        with pytest.raises(ValueError):
            harness.SimConfig(q=32)
        with pytest.raises(ValueError):
            harness.SimConfig(ebn0_db=())
        with pytest.raises(ValueError):
            harness.SimConfig(designs=("zf",))

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text(
            "# comment line\n"
            "m = 32\nm_u = 12\nq = 16\nebn0_db = 0, 10\n"
            "designs = dfe-ul, thp-sum\nnu = 8\ntau = auto\n"
            "master_seed = 9\nblock_len = 50\nn_channels = 1\n"
            "f_s = 1.92e6\nl_ch = 14\nout = run.csv\n")
        cfg = harness.load_config(path)
        assert cfg.m == 32 and cfg.ebn0_db == (0.0, 10.0)
        assert cfg.designs == ("dfe-ul", "thp-sum") and cfg.nu == 8

    def test_unknown_config_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("modulation = qam\n")
        with pytest.raises(ValueError, match="unknown config key"):
            harness.load_config(path)

    def test_transient_window(self):
        cfg = harness.desk_scale()
        # ceil(2*(257-1)/32) + L_f = 16 + 7
        assert cfg.transient_cut(cfg.l_f) == 23


class TestLatencyResolution:
    def test_pinned_latency_is_used_verbatim(self):
        assert harness.resolve_latency(micro_config(nu=8)) == {"linear": 8, "dfe": 8}

    def test_auto_latency_is_deterministic_and_in_range(self):
        cfg = micro_config(nu="auto")
        a = harness.resolve_latency(cfg)
        b = harness.resolve_latency(cfg)
        assert a == b
        for fam, lengths in (("linear", cfg.l_lin), ("dfe", cfg.l_f)):
            n = 17 + lengths - 1  # N for this micro geometry
            assert 0 <= a[fam] <= n - 1


class TestRunCell:
    def test_clean_channel_low_noise_is_error_free(self):
        # 40 dB: noise negligible at the slicer but still large enough to
        # keep the modulo-alphabet duality denominators positive
        cfg = micro_config(ebn0_db=(40.0,))
        ideal = chmod.ideal_channel(cfg.f_s)
        for design in harness.DESIGNS:
            rec = harness.run_cell(cfg, design, 40.0, 0, ch=ideal)
            assert rec["n_err"] == 0, design

    def test_identical_seeds_give_identical_records(self):
        cfg = micro_config()
        a = harness.run_cell(cfg, "dfe-ul", 12.0, 1)
        b = harness.run_cell(cfg, "dfe-ul", 12.0, 1)
        assert a == b

    def test_unknown_design_rejected(self):
        with pytest.raises(ValueError):
            harness.run_cell(micro_config(), "zf", 12.0, 0)

    def test_records_are_consistent(self):
        cfg = micro_config()
        rec = harness.run_cell(cfg, "dfe-ul", 12.0, 0)
        assert 0 <= rec["n_err"] <= rec["n_bits"]
        assert rec["sq_err"] >= 0 and rec["n_est"] > 0
        assert rec["mse_analytic"] > 0


class TestSweep:
    def test_single_cell_grid_gives_one_row(self, tmp_path):
        cfg = micro_config(n_channels=1, out=str(tmp_path / "one.csv"))
        rows = harness.sweep(cfg)
        assert len(rows) == 1
        assert rows[0]["n_channels"] == 1

    def test_row_count_is_designs_times_grid(self, tmp_path):
        cfg = micro_config(designs=("linear-ul", "dfe-ul"), ebn0_db=(5.0, 15.0),
                           out=str(tmp_path / "grid.csv"))
        rows = harness.sweep(cfg)
        assert len(rows) == 4

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = micro_config(out=str(tmp_path / "a.csv"))
        harness.sweep(cfg)
        first = (tmp_path / "a.csv").read_bytes()
        harness.sweep(cfg)
        assert (tmp_path / "a.csv").read_bytes() == first

    def test_csv_schema(self, tmp_path):
        cfg = micro_config(out=str(tmp_path / "s.csv"))
        harness.sweep(cfg)
        lines = (tmp_path / "s.csv").read_text().splitlines()
        header = [ln for ln in lines if ln.startswith("#")]
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == harness.CSV_COLUMNS
        assert any("transient exclusion" in ln for ln in header)
        assert any("sigma_eta2" in ln for ln in header)
        fields = data[1].split(",")
        assert fields[0] == "dfe-ul"
        assert 0.0 <= float(fields[2]) <= 1.0
        assert not list(tmp_path.glob("*.tmp"))

    def test_infeasible_cells_are_skipped_not_fatal(self, tmp_path, caplog):
        import logging
        # 60 dB pushes the modulo-alphabet duality denominator negative on
        # this configuration; the sweep must survive and mark the row
        cfg = micro_config(designs=("thp-sum",), ebn0_db=(60.0,),
                           out=str(tmp_path / "inf.csv"))
        with caplog.at_level(logging.WARNING, logger="fbmclink.harness"):
            rows = harness.sweep(cfg)
        assert len(rows) == 1
        assert rows[0]["n_channels"] < cfg.n_channels
        assert any("skipping cell" in r.message for r in caplog.records)

    def test_parallel_matches_serial(self, tmp_path):
        cfg_s = micro_config(out=str(tmp_path / "ser.csv"))
        cfg_p = micro_config(out=str(tmp_path / "par.csv"))
        harness.sweep(cfg_s, parallel=1)
        harness.sweep(cfg_p, parallel=2)
        a = (tmp_path / "ser.csv").read_text().splitlines()
        b = (tmp_path / "par.csv").read_text().splitlines()
        assert [ln for ln in a if not ln.startswith("#")] == \
               [ln for ln in b if not ln.startswith("#")]


class TestEmpiricalMse:
    def test_identical_arrays_give_zero(self):
        x = np.ones((2, 5))
        assert harness.empirical_mse(x, x) == 0.0

    def test_constant_offset_gives_square(self):
        x = np.zeros((3, 4))
        assert harness.empirical_mse(x, x + 0.5) == pytest.approx(0.25)

    def test_white_noise_estimate_gives_variance(self):
        rng = np.random.default_rng(0)
        est = rng.normal(scale=0.3, size=10**6)
        assert harness.empirical_mse(np.zeros(10**6), est) == pytest.approx(0.09, rel=0.02)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            harness.empirical_mse(np.zeros(3), np.zeros(4))
