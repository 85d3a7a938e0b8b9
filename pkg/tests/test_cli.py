import json

import numpy as np
import pytest

from btcsim.cli import main
from btcsim.csvio import parse_int_list, parse_range


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestParsing:
    def test_range_grid_is_inclusive_exclusive(self):
        values = parse_range("0.1:2.0:0.1")
        assert len(values) == 20
        assert values[0] == pytest.approx(0.1)
        assert values[-1] == pytest.approx(2.0)

    def test_range_rejects_malformed(self):
        with pytest.raises(ValueError):
            parse_range("1:2")

    def test_int_list(self):
        assert parse_int_list("12,16,20") == [12, 16, 20]
        with pytest.raises(ValueError):
            parse_int_list("12,a")


class TestSpectrumCommand:
    def test_smoke_and_steady_state_row(self, tmp_path):
        out = tmp_path / "run"
        assert main(["spectrum", "--n-spins", "12", "--omega0", "1.5",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out / "spectrum.csv")
        assert header == ["j", "re_lambda", "im_lambda"]
        assert len(rows) == 13 * 13
        assert rows[0][0] == "0"
        assert abs(float(rows[0][1])) <= 1e-9
        assert (out / "bands.csv").exists()
        assert (out / "run.json").exists()

    def test_gapped_phase_reports_no_bands(self, tmp_path):
        out = tmp_path / "run"
        assert main(["spectrum", "--n-spins", "12", "--omega0", "0.5",
                     "--out", str(out)]) == 0
        _, rows = read_csv(out / "bands.csv")
        assert rows == []

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["spectrum", "--n-spins", "0"])
        assert err.value.code == 2

    def test_kappa_zero_rejected(self):
        with pytest.raises(SystemExit) as err:
            main(["spectrum", "--kappa", "0"])
        assert err.value.code == 2

    def test_kappa_invariance_of_output(self, tmp_path):
        # everything is reported in units of kappa
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["spectrum", "--n-spins", "8", "--omega0", "1.5", "--out", str(out1)])
        main(["spectrum", "--n-spins", "8", "--omega0", "1.5", "--kappa", "2.5",
              "--out", str(out2)])
        _, rows1 = read_csv(out1 / "spectrum.csv")
        _, rows2 = read_csv(out2 / "spectrum.csv")
        # compare as multisets: ulp-level |Re| ties can swap conjugate partners
        a = [complex(float(r[1]), float(r[2])) for r in rows1]
        b = [complex(float(r[1]), float(r[2])) for r in rows2]
        worst = 0.0
        for lam in a:
            idx = int(np.argmin(np.abs(np.asarray(b) - lam)))
            worst = max(worst, abs(b.pop(idx) - lam))
        assert worst <= 1e-9


class TestEvolveCommand:
    def test_default_run_has_finite_eta(self, tmp_path):
        out = tmp_path / "run"
        assert main(["evolve", "--out", str(out)]) == 0
        header, rows = read_csv(out / "decay.csv")
        assert header == ["eta", "frequency", "residual", "n_peaks_used", "fittable"]
        assert rows[0][4] == "true"
        assert float(rows[0][0]) > 0
        assert (out / "trajectory.csv").exists()
        assert (out / "fourier.csv").exists()

    def test_deterministic_bytes(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["evolve", "--n-spins", "10", "--t-max", "15", "--dt", "0.01"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        for name in ("trajectory.csv", "fourier.csv", "decay.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_run_config_serialized(self, tmp_path):
        out = tmp_path / "run"
        main(["evolve", "--n-spins", "8", "--t-max", "12", "--out", str(out)])
        config = json.loads((out / "run.json").read_text())
        assert config["n_spins"] == 8
        assert config["t_max"] == 12.0
        assert config["command"] == "evolve"


class TestNessCommand:
    def test_scan_row_count(self, tmp_path):
        out = tmp_path / "run"
        assert main(["ness", "--n-spins", "30", "--scan-omega0", "0.1:2.0:0.1",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out / "ness.csv")
        assert header[0] == "omega0_over_kappa"
        assert len(rows) == 20

    def test_single_point(self, tmp_path):
        out = tmp_path / "run"
        assert main(["ness", "--n-spins", "20", "--omega0", "0.5",
                     "--out", str(out)]) == 0
        _, rows = read_csv(out / "ness.csv")
        assert len(rows) == 1
        assert float(rows[0][3]) == pytest.approx(-0.86, abs=0.05)


class TestMeanfieldCommand:
    def test_conserved_column_constant(self, tmp_path):
        out = tmp_path / "run"
        assert main(["meanfield", "--omega0", "1.5", "--omega-z", "0.5",
                     "--m0", "1,0,0", "--t-max", "30", "--out", str(out)]) == 0
        header, rows = read_csv(out / "meanfield.csv")
        r_idx = header.index("R")
        values = np.array([float(r[r_idx]) for r in rows])
        assert np.nanmax(np.abs(values - values[0])) <= 1e-5 * (1 + abs(values[0]))

    def test_ratio_column_without_couplings(self, tmp_path):
        out = tmp_path / "run"
        assert main(["meanfield", "--omega0", "1.5", "--m0", "1,0,0",
                     "--t-max", "20", "--out", str(out)]) == 0
        header, rows = read_csv(out / "meanfield.csv")
        m_idx = header.index("M")
        values = np.array([float(r[m_idx]) for r in rows])
        assert np.nanmax(np.abs(values - values[0])) <= 1e-5

    def test_bad_m0(self, tmp_path):
        assert main(["meanfield", "--m0", "1,0", "--out", str(tmp_path)]) == 1


class TestPortraitCommand:
    def test_spiral_regime_has_both_classes(self, tmp_path):
        out = tmp_path / "run"
        assert main(["portrait", "--omega0", "2.0", "--omega-z", "1.2",
                     "--grid-q", "4", "--grid-p", "4", "--t-max", "100",
                     "--out", str(out)]) == 0
        _, rows = read_csv(out / "portrait.csv")
        classes = {r[2] for r in rows}
        assert "closed" in classes
        assert "attracted" in classes
        header, fp_rows = read_csv(out / "fixed_points.csv")
        assert header == ["mx", "my", "mz", "class", "jac_eigs"]
        assert {r[3] for r in fp_rows} >= {"attracting", "repelling"}


class TestScalingCommand:
    def test_small_sweep(self, tmp_path):
        out = tmp_path / "run"
        assert main(["scaling", "--sizes", "12,16,20", "--t-max", "25",
                     "--dt", "0.01", "--out", str(out)]) == 0
        header, rows = read_csv(out / "eta_scaling.csv")
        assert header == ["n_spins", "eta", "re_lambda_ref", "frequency"]
        assert len(rows) == 3
        _, fit_rows = read_csv(out / "eta_fit.csv")
        assert len(fit_rows) == 1
        assert float(fit_rows[0][0]) > 0  # beta

    def test_too_few_sizes_is_runtime_error(self, tmp_path):
        assert main(["scaling", "--sizes", "8,12", "--out", str(tmp_path)]) == 1


class TestWorkerCap:
    def test_thread_env_respected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BTC_THREADS", "2")
        out1 = tmp_path / "a"
        main(["gapscan", "--sizes", "6,8,10", "--omega0", "1.5", "--out", str(out1)])
        monkeypatch.setenv("BTC_THREADS", "1")
        out2 = tmp_path / "b"
        main(["gapscan", "--sizes", "6,8,10", "--omega0", "1.5", "--out", str(out2)])
        assert (out1 / "gapscan.csv").read_text() == (out2 / "gapscan.csv").read_text()
