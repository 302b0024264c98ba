import os

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from mlt_tool import cli_io, fp_solver
from mlt_tool.cli_io import (BORDERLINE_STARTS, STABLE_STARTS, RunConfig,
                             ValidationError, emit_config, parse_config,
                             parse_config_dict)


class TestParseConfig:
    def test_minimal_config_applies_defaults(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("kind: mlt\n")
        config = parse_config(path)
        assert config.kind == "mlt"
        assert config.alpha == 0.5
        assert config.sigma == 0.25
        assert config.J == 100 and config.T == 100.0
        assert config.s0 == STABLE_STARTS[0]

    def test_alpha_bound_named_in_error(self):
        with pytest.raises(ValidationError) as err:
            parse_config_dict({"kind": "mlt", "noise": {"alpha": 2.5}})
        assert any("noise.alpha" in e and "(0, 2]" in e for e in err.value.errors)

    def test_sweep_lists_make_cell_plan(self):
        config = parse_config_dict({
            "kind": "phase-diagram",
            "noise": {"alphas": [0.5, 1.0, 1.5, 2.0], "sigmas": [0.25]},
        })
        assert len(config.sweep_cells) == 4
        assert config.sweep_cells[0] == (0.5, 0.25)

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ValidationError) as err:
            parse_config_dict({"kind": "mlt", "frobnicate": 1,
                               "noise": {"alpna": 0.5}})
        msgs = "\n".join(err.value.errors)
        assert "frobnicate: unknown key" in msgs
        assert "noise.alpna: unknown key" in msgs

    def test_all_violations_reported_together(self):
        with pytest.raises(ValidationError) as err:
            parse_config_dict({"kind": "density",
                               "noise": {"alpha": -1.0, "sigma": -2.0},
                               "solver": {"J": 1}})
        msgs = "\n".join(err.value.errors)
        assert "noise.alpha" in msgs and "noise.sigma" in msgs and "solver.J" in msgs

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            parse_config_dict({"kind": "frobnicate"})

    def test_unreadable_file_raises_parse_error(self, tmp_path):
        with pytest.raises(cli_io.ParseError):
            parse_config(tmp_path / "missing.yaml")
        bad = tmp_path / "bad.yaml"
        bad.write_text("kind: [unclosed\n")
        with pytest.raises(cli_io.ParseError):
            parse_config(bad)

    def test_named_start_pairs_resolve(self):
        config = parse_config_dict({"kind": "phase-diagram",
                                    "run": {"start_pair": "unstable"}})
        assert config.start_states() == BORDERLINE_STARTS
        config = parse_config_dict({"kind": "phase-diagram",
                                    "run": {"start_pair": [[-1.0, 0.2], [2.0, 0.3]]}})
        assert config.start_states() == ((-1.0, 0.2), (2.0, 0.3))


_configs = st.builds(
    RunConfig,
    kind=st.sampled_from(cli_io.KINDS),
    seed=st.integers(min_value=0, max_value=2 ** 31),
    jobs=st.integers(min_value=1, max_value=8),
    alpha=st.floats(min_value=0.1, max_value=2.0, allow_nan=False),
    sigma=st.floats(min_value=0.0, max_value=4.0, allow_nan=False),
    alphas=st.one_of(st.none(), st.tuples(st.floats(0.25, 2.0), st.floats(0.25, 2.0))),
    sigmas=st.one_of(st.none(), st.tuples(st.floats(0.05, 1.0))),
    J=st.integers(min_value=2, max_value=400),
    T=st.floats(min_value=1.0, max_value=200.0, allow_nan=False),
    snapshot_dt=st.floats(min_value=0.1, max_value=1.0, allow_nan=False),
    s0=st.tuples(st.floats(-59.0, 39.0), st.floats(0.01, 0.59)),
    dwell=st.integers(min_value=1, max_value=10),
    n_paths=st.integers(min_value=1, max_value=10 ** 6),
    em_dt=st.floats(min_value=1e-4, max_value=0.1, allow_nan=False),
    t_check=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
)


class TestRoundTrip:
    @given(_configs)
    @settings(max_examples=120, deadline=None)
    def test_parse_emit_identity(self, config):
        assert parse_config_dict(yaml.safe_load(emit_config(config))) == config

    def test_round_trip_through_file(self, tmp_path):
        config = RunConfig(kind="density", seed=7, alpha=1.25, sigma=0.75, J=64)
        path = tmp_path / "cfg.yaml"
        path.write_text(emit_config(config))
        assert parse_config(path) == config


def _tiny(kind, out, **over):
    base = dict(kind=kind, output=str(out), J=24, T=2.0, snapshot_dt=0.5,
                times=(1.0, 2.0), n_paths=500, em_dt=0.01, t_check=1.0)
    base.update(over)
    return RunConfig(**base)


class TestRunKinds:
    def test_phase_portrait_artifacts(self, tmp_path):
        status, manifest = cli_io.run("phase-portrait",
                                      _tiny("phase-portrait", tmp_path / "pp"))
        assert status == 0
        names = set(manifest["artifacts"])
        assert {"fixed_point.csv", "stable_cycle.csv",
                "unstable_cycle.csv", "cycles.yaml"} <= names
        rows = np.genfromtxt(tmp_path / "pp" / "stable_cycle.csv",
                             delimiter=",", names=True)
        assert set(rows.dtype.names) == {"v", "w"}

    def test_density_run_writes_snapshots(self, tmp_path):
        status, manifest = cli_io.run("density", _tiny("density", tmp_path / "d"))
        assert status == 0
        assert "density_t1.bin" in manifest["artifacts"]
        assert "density_t2.csv" in manifest["artifacts"]
        field, alpha, sigma = fp_solver.read_snapshot(tmp_path / "d" / "density_t1.bin")
        assert (alpha, sigma) == (0.5, 0.25)
        assert field.time == 1.0

    def test_mlt_run_writes_track_and_verdict(self, tmp_path):
        status, manifest = cli_io.run("mlt", _tiny("mlt", tmp_path / "m"))
        assert status == 0
        assert {"mlt.csv", "verdict.yaml"} <= set(manifest["artifacts"])
        verdict = yaml.safe_load((tmp_path / "m" / "verdict.yaml").read_text())
        assert verdict["tag"] in ("StayOscillate", "ToRest", "Undecided")

    def test_phase_diagram_run(self, tmp_path):
        config = _tiny("phase-diagram", tmp_path / "pd",
                       alphas=(0.5, 2.0), sigmas=(0.25,))
        status, manifest = cli_io.run("phase-diagram", config)
        assert status == 0
        rows = np.genfromtxt(tmp_path / "pd" / "phase_diagram.csv",
                             delimiter=",", names=True, dtype=None, encoding="utf-8")
        assert len(np.atleast_1d(rows)) == 2

    def test_mc_check_run(self, tmp_path):
        status, manifest = cli_io.run("mc-check", _tiny("mc-check", tmp_path / "mc"))
        assert status == 0
        rows = np.genfromtxt(tmp_path / "mc" / "mc_check.csv",
                             delimiter=",", names=True)
        assert 0.0 <= float(rows["total_variation"]) <= 1.0

    def test_manifest_lists_every_artifact(self, tmp_path):
        out = tmp_path / "pp2"
        _, manifest = cli_io.run("phase-portrait", _tiny("phase-portrait", out))
        on_disk = {name for name in os.listdir(out) if name != "manifest.yaml"}
        assert set(manifest["artifacts"]) == on_disk

    def test_deterministic_checksums(self, tmp_path):
        config_a = _tiny("mc-check", tmp_path / "a", seed=11)
        config_b = _tiny("mc-check", tmp_path / "b", seed=11)
        _, man_a = cli_io.run("mc-check", config_a)
        _, man_b = cli_io.run("mc-check", config_b)
        assert man_a["artifacts"] == man_b["artifacts"]


class TestEmitPlotdata:
    def test_mlt_style(self, tmp_path):
        cli_io.run("mlt", _tiny("mlt", tmp_path / "m"))
        paths = cli_io.emit_plotdata(tmp_path / "m" / "mlt.csv", "mlt")
        dat = [p for p in paths if p.endswith(".dat")][0]
        cols = np.loadtxt(dat)
        assert cols.shape[1] == 3
        assert any(p.endswith(".gp") for p in paths)

    def test_density_style(self, tmp_path):
        cli_io.run("density", _tiny("density", tmp_path / "d"))
        paths = cli_io.emit_plotdata(tmp_path / "d" / "density_t1.bin", "density")
        dat = [p for p in paths if p.endswith(".dat")][0]
        cols = np.loadtxt(dat)
        assert cols.shape == (47 * 47, 3)

    def test_phase_diagram_style(self, tmp_path):
        config = _tiny("phase-diagram", tmp_path / "pd", alphas=(0.5, 2.0),
                       sigmas=(0.25,))
        cli_io.run("phase-diagram", config)
        paths = cli_io.emit_plotdata(tmp_path / "pd" / "phase_diagram.csv",
                                     "phase-diagram")
        suffixes = {os.path.basename(p) for p in paths}
        assert {"phase_diagram_o.dat", "phase_diagram_x.dat",
                "phase_diagram_plus.dat", "phase_diagram.gp"} <= suffixes

    def test_unknown_style_and_missing_artifact(self, tmp_path):
        with pytest.raises(cli_io.UnknownArtifactError):
            cli_io.emit_plotdata(tmp_path / "nope.csv", "mlt")
        (tmp_path / "x.bin").write_bytes(b"JUNKJUNK" + b"\0" * 100)
        with pytest.raises(cli_io.UnknownArtifactError):
            cli_io.emit_plotdata(tmp_path / "x.bin", "density")
        with pytest.raises(cli_io.UnknownArtifactError):
            cli_io.emit_plotdata(tmp_path / "x.bin", "sculpture")


class TestMain:
    def test_cli_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(emit_config(_tiny("phase-portrait", tmp_path / "out")))
        status = cli_io.main(["phase-portrait", "--config", str(cfg)])
        assert status == 0
        assert (tmp_path / "out" / "manifest.yaml").exists()

    def test_cli_out_and_seed_override(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(emit_config(_tiny("mc-check", tmp_path / "ignored")))
        status = cli_io.main(["mc-check", "--config", str(cfg),
                              "--out", str(tmp_path / "real"), "--seed", "5"])
        assert status == 0
        manifest = yaml.safe_load((tmp_path / "real" / "manifest.yaml").read_text())
        assert manifest["config"]["seed"] == 5

    def test_cli_invalid_config_exits_nonzero(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("kind: mlt\nnoise: {alpha: 9.0}\n")
        assert cli_io.main(["mlt", "--config", str(cfg)]) == 2
        assert "noise.alpha" in capsys.readouterr().err

    def test_jobs_env_cap(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.yaml"
        config = _tiny("phase-diagram", tmp_path / "out", alphas=(2.0,),
                       sigmas=(0.25,), jobs=4)
        cfg.write_text(emit_config(config))
        monkeypatch.setenv("MLT_JOBS", "1")
        status = cli_io.main(["phase-diagram", "--config", str(cfg)])
        assert status == 0
        manifest = yaml.safe_load((tmp_path / "out" / "manifest.yaml").read_text())
        assert manifest["config"]["jobs"] == 1

    def test_plot_data_subcommand(self, tmp_path, capsys):
        cli_io.run("mlt", _tiny("mlt", tmp_path / "m"))
        status = cli_io.main(["plot-data", "--artifact",
                              str(tmp_path / "m" / "mlt.csv"), "--style", "mlt"])
        assert status == 0
        assert "mlt_plot.dat" in capsys.readouterr().out
