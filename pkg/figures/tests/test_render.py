import json
import shutil
import subprocess

import numpy as np
import pytest

from btcfigures.cli import main
from btcfigures.render import FigureSpec, render
from btcfigures.schemas import SchemaError, load_table


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def tables(tmp_path):
    """One small synthetic CSV per documented schema."""
    t = np.round(np.arange(0.0, 8.0, 0.1), 3)
    paths = {}
    paths["trajectory"] = write_csv(
        tmp_path / "trajectory.csv",
        ["t", "sx", "sy", "sz", "var_x", "var_y", "var_z", "trace", "purity"],
        [(ti, np.cos(ti), np.sin(ti), np.cos(1.1 * ti), 0.5, 0.5, 0.4, 1.0, 0.9)
         for ti in t],
    )
    paths["spectrum"] = write_csv(
        tmp_path / "spectrum.csv", ["j", "re_lambda", "im_lambda"],
        [(j, -0.1 * j, 1.1 * ((-1) ** j) * (j // 2)) for j in range(20)],
    )
    paths["gapscan"] = write_csv(
        tmp_path / "gapscan.csv", ["n_spins", "j", "re_lambda"],
        [(n, j, -j * 1.5 / n) for n in (12, 16, 20) for j in range(3)],
    )
    paths["bands"] = write_csv(
        tmp_path / "bands.csv", ["band_index", "im_center"],
        [(i, 1.1 * (i - 2)) for i in range(5)],
    )
    paths["fourier"] = write_csv(
        tmp_path / "fourier.csv", ["omega", "power"],
        [(0.1 * k, float(np.exp(-((0.1 * k - 1.1) ** 2) / 0.01))) for k in range(60)],
    )
    paths["eta_scaling"] = write_csv(
        tmp_path / "eta_scaling.csv", ["n_spins", "eta", "re_lambda_ref", "frequency"],
        [(n, 2.9 / n, 2.8 / n, 1.1) for n in (12, 16, 20, 24)],
    )
    paths["ness"] = write_csv(
        tmp_path / "ness.csv",
        ["omega0_over_kappa", "sx", "sy", "sz", "var_x", "var_y", "var_z"],
        [(w, 0.0, min(w, 1.0), -max(1 - w**2, 0.0) ** 0.5, 0.4, 0.4, 0.2)
         for w in (0.2, 0.5, 0.8, 1.1, 1.4)],
    )
    paths["portrait"] = write_csv(
        tmp_path / "portrait.csv", ["seed_q", "seed_p", "class", "period_estimate"],
        [(q, p, "closed" if q > 0 else "attracted", 5.0)
         for q in (-0.5, 0.5) for p in (0.0, 1.0, 2.0)],
    )
    paths["fixed_points"] = write_csv(
        tmp_path / "fixed_points.csv", ["mx", "my", "mz", "class", "jac_eigs"],
        [(0.7, 0.3, -0.6, "attracting", "-0.6+1.5j;-0.6-1.5j;0+0j")],
    )
    paths["meanfield"] = write_csv(
        tmp_path / "meanfield.csv",
        ["t", "mx", "my", "mz", "norm", "M", "R", "branch_n"],
        [(ti, np.cos(ti), np.sin(ti), 0.1, 1.0, -0.5, 2.2, 0) for ti in t],
    )
    return paths


ALL_KINDS = [
    ("trajectory", ["trajectory"]),
    ("spectrum", ["spectrum", "spectrum"]),
    ("gapscan", ["gapscan"]),
    ("bands", ["bands", "bands"]),
    ("fourier", ["fourier"]),
    ("eta_scaling", ["eta_scaling"]),
    ("ness", ["ness"]),
    ("portrait", ["portrait", "fixed_points"]),
    ("meanfield", ["meanfield"]),
]


class TestSchemas:
    def test_loads_valid_table(self, tables):
        frame = load_table(tables["spectrum"], "spectrum")
        assert list(frame.columns) == ["j", "re_lambda", "im_lambda"]

    def test_missing_column_named(self, tmp_path):
        bad = write_csv(tmp_path / "spectrum.csv", ["j", "re_lambda"], [(0, 0.0)])
        with pytest.raises(SchemaError, match="im_lambda"):
            load_table(bad, "spectrum")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="does not exist"):
            load_table(tmp_path / "nope.csv", "spectrum")

    def test_unknown_kind(self, tables):
        with pytest.raises(SchemaError, match="unknown table kind"):
            load_table(tables["spectrum"], "waterfall")


class TestRender:
    @pytest.mark.parametrize("kind,inputs", ALL_KINDS)
    def test_each_kind_renders(self, tables, tmp_path, kind, inputs):
        spec = FigureSpec(
            figure=kind,
            inputs=tuple(str(tables[name]) for name in inputs),
            output=str(tmp_path / f"{kind}.png"),
        )
        out = render(spec)
        assert out.exists()
        assert out.stat().st_size > 1000

    @pytest.mark.parametrize("suffix", [".png", ".svg"])
    def test_deterministic_bytes(self, tables, tmp_path, suffix):
        spec = FigureSpec(
            figure="fourier",
            inputs=(str(tables["fourier"]),),
            output=str(tmp_path / f"fig{suffix}"),
        )
        first = render(spec).read_bytes()
        second = render(spec).read_bytes()
        assert first == second

    def test_unknown_figure_kind(self, tables, tmp_path):
        spec = FigureSpec("waterfall", (str(tables["fourier"]),),
                          str(tmp_path / "x.png"))
        with pytest.raises(ValueError, match="unknown figure kind"):
            render(spec)

    def test_schema_failure_propagates(self, tmp_path):
        bad = write_csv(tmp_path / "fourier.csv", ["omega"], [(0.0,)])
        spec = FigureSpec("fourier", (str(bad),), str(tmp_path / "x.png"))
        with pytest.raises(SchemaError, match="power"):
            render(spec)

    def test_bad_output_format(self, tables, tmp_path):
        spec = FigureSpec("fourier", (str(tables["fourier"]),),
                          str(tmp_path / "x.pdf"))
        with pytest.raises(ValueError, match="png or .svg"):
            render(spec)


class TestCli:
    def test_render_list_spec(self, tables, tmp_path):
        spec = [
            {"figure": "fourier", "inputs": [str(tables["fourier"])],
             "output": str(tmp_path / "a.png")},
            {"figure": "ness", "inputs": [str(tables["ness"])],
             "output": str(tmp_path / "b.png"), "title": "steady state"},
        ]
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        assert main(["render", "--spec", str(spec_path)]) == 0
        assert (tmp_path / "a.png").exists()
        assert (tmp_path / "b.png").exists()

    def test_schema_error_is_runtime_failure(self, tmp_path):
        bad = write_csv(tmp_path / "fourier.csv", ["omega"], [(0.0,)])
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(
            {"figure": "fourier", "inputs": [str(bad)],
             "output": str(tmp_path / "x.png")}))
        assert main(["render", "--spec", str(spec_path)]) == 1

    def test_unknown_spec_field_rejected(self, tables, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(
            {"figure": "fourier", "inputs": [str(tables["fourier"])],
             "output": str(tmp_path / "x.png"), "color": "red"}))
        assert main(["render", "--spec", str(spec_path)]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["render"])
        assert err.value.code == 2


@pytest.fixture(scope="module")
def sim_outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("sim")

    def run(*args):
        subprocess.run(["btcsim", *args], check=True, capture_output=True)

    run("spectrum", "--n-spins", "16", "--omega0", "0.5", "--out", str(base / "strong"))
    run("spectrum", "--n-spins", "16", "--omega0", "1.5", "--out", str(base / "weak"))
    run("scaling", "--sizes", "12,16,20", "--t-max", "30", "--dt", "0.01",
        "--out", str(base / "scaling"))
    run("evolve", "--n-spins", "16", "--t-max", "60", "--out", str(base / "evolve"))
    run("portrait", "--omega0", "2.0", "--omega-z", "1.2", "--grid-q", "4",
        "--grid-p", "4", "--t-max", "100", "--out", str(base / "portrait"))
    return base


@pytest.mark.skipif(shutil.which("btcsim") is None,
                    reason="simulator CLI not on PATH")
class TestAgainstSimulatorOutputs:
    """Render the four paper-style plots from real simulator CSVs
    (spectrum dichotomy, decay-rate scaling, Fourier peaks, portrait)
    and check byte-level determinism on rerun."""

    def test_paper_style_plots_render_deterministically(self, sim_outputs, tmp_path):
        specs = [
            {"figure": "spectrum",
             "inputs": [str(sim_outputs / "strong" / "spectrum.csv"),
                        str(sim_outputs / "weak" / "spectrum.csv")],
             "labels": ["strong dissipation", "weak dissipation"],
             "output": str(tmp_path / "spectrum_phases.png")},
            {"figure": "eta_scaling",
             "inputs": [str(sim_outputs / "scaling" / "eta_scaling.csv")],
             "output": str(tmp_path / "eta_scaling.png")},
            {"figure": "fourier",
             "inputs": [str(sim_outputs / "evolve" / "fourier.csv")],
             "output": str(tmp_path / "fourier.png")},
            {"figure": "portrait",
             "inputs": [str(sim_outputs / "portrait" / "portrait.csv"),
                        str(sim_outputs / "portrait" / "fixed_points.csv")],
             "output": str(tmp_path / "portrait.png")},
        ]
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(specs))
        assert main(["render", "--spec", str(spec_path)]) == 0
        snapshots = {s["output"]: open(s["output"], "rb").read() for s in specs}
        assert main(["render", "--spec", str(spec_path)]) == 0
        for path, first in snapshots.items():
            assert open(path, "rb").read() == first, f"nondeterministic bytes: {path}"
