"""Serialisation and command-line behaviour: formats, round trips, determinism."""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatinv import (
    ConfigError,
    NoiseSpec,
    ParseError,
    make_observations,
    make_problem,
    read_observations,
    write_observations,
)
from heatinv.cli import main
from heatinv.io import ExperimentConfig, fmt, load_config, save_config


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_text_round_trip(x):
    assert float(fmt(x)) == x


def make_obs(preset="decay1", order=4, t_final=0.02, dt=1e-3, noise=None):
    p = make_problem(preset, order, t_final, dt)
    return make_observations(p, 1.0, noise)


class TestExperimentConfig:
    def test_round_trip(self, tmp_path):
        cfg = ExperimentConfig(preset="generic", t_final=2.0, dt=1e-2, seed=5,
                               levels=(0.0, 1e-5), schedule_times=(1.0, 0.5))
        path = tmp_path / "config.json"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys: bogus"):
            ExperimentConfig.from_dict({"preset": "generic", "bogus": 1})

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            ExperimentConfig.from_dict({"preset": "nope"})

    def test_preset_and_samples_mutually_exclusive(self):
        with pytest.raises(ConfigError, match="mutually exclusive"):
            ExperimentConfig(preset="generic", g_amplitudes=(1.0,))

    def test_hash_stable_and_sensitive(self):
        a = ExperimentConfig(seed=1)
        b = ExperimentConfig(seed=1)
        c = ExperimentConfig(seed=2)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()

    def test_not_json_object(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_sample_file_problem(self, tmp_path):
        n = 11
        dt = 0.1
        t = dt * np.arange(n)
        hp = tmp_path / "h.csv"
        hp.write_text("t,value\n" + "\n".join(f"{ti},{1.0 + ti}" for ti in t) + "\n")
        cfg = ExperimentConfig(preset=None, h_csv=str(hp), g_amplitudes=(1.0,),
                               order=4, t_final=1.0, dt=dt)
        p = cfg.make_problem()
        np.testing.assert_allclose(p.h_grid().values, 1.0 + t)
        np.testing.assert_allclose(p.v_grid().values, 0.0)


class TestObservationFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        obs = make_obs("generic", order=8, t_final=0.05,
                       noise=NoiseSpec("relative", 1e-4, seed=3))
        meta = {"y": obs.y, "dt": obs.u1.dt, "order": 8, "seed": 3}
        path = tmp_path / "obs.csv"
        write_observations(path, obs, meta)
        back, meta2 = read_observations(path)
        assert np.array_equal(back.u1.values, obs.u1.values)
        assert np.array_equal(back.u3.values, obs.u3.values)
        assert np.array_equal(back.uy.values, obs.uy.values)
        assert back.y == obs.y
        assert meta2["order"] == 8

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text('# meta = {"y": 1.0, "dt": 0.001}\nt,u1,u3,uy\n0,1,0\n')
        with pytest.raises(ParseError, match="line 3"):
            read_observations(path)

    def test_non_numeric_reports_line(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text('# meta = {"y": 1.0, "dt": 0.001}\nt,u1,u3,uy\n0,1,0,zap\n')
        with pytest.raises(ParseError, match="line 3"):
            read_observations(path)

    def test_missing_y_rejected(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("# meta = {}\nt,u1,u3,uy\n0,1,0,0\n0.001,1,0,0\n")
        with pytest.raises(ParseError, match="observation point"):
            read_observations(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text('# meta = {"y": 1.0}\ntime,u1,u3,uy\n0,1,0,0\n')
        with pytest.raises(ParseError, match="header"):
            read_observations(path)

    def test_time_column_must_match_meta_step(self, tmp_path):
        from heatinv import DataError

        path = tmp_path / "obs.csv"
        path.write_text(
            '# meta = {"y": 1.0, "dt": 0.001}\nt,u1,u3,uy\n0,1,0,0\n0.002,1,0,0\n'
        )
        with pytest.raises(DataError, match="uniform grid"):
            read_observations(path)

    def test_schedule_times_reach_the_peel(self):
        cfg = ExperimentConfig(preset="generic", schedule_times=(3.0, 1.5))
        inv = cfg.inversion_config()
        np.testing.assert_allclose(inv.schedule.times, [3.0, 1.5])
        assert np.all(inv.schedule.windows == 1)


class TestCliSimulate:
    def test_decay1_u1_column(self, tmp_path):
        cfg = ExperimentConfig(preset="decay1", order=4, t_final=0.1, dt=1e-2)
        cfg_path = tmp_path / "config.json"
        save_config(cfg, cfg_path)
        assert main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
        obs, meta = read_observations(tmp_path / "observations.csv")
        np.testing.assert_allclose(obs.u1.values, np.exp(-obs.u1.times), atol=1e-13)
        assert meta["preset"] == "decay1"
        assert "config_sha256" in meta

    def test_steady_uy_constant(self, tmp_path):
        cfg = ExperimentConfig(preset="steady", order=8, t_final=0.5, dt=1e-2)
        save_config(cfg, tmp_path / "c.json")
        main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)])
        obs, _ = read_observations(tmp_path / "observations.csv")
        assert np.max(np.abs(obs.uy.values - obs.uy.values[0])) < 1e-5

    def test_rerun_byte_identical(self, tmp_path):
        cfg = ExperimentConfig(preset="generic", order=8, t_final=0.2, dt=1e-2,
                               noise_kind="relative", noise_level=1e-4, seed=11)
        save_config(cfg, tmp_path / "c.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(out1)])
        main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(out2)])
        assert (out1 / "observations.csv").read_bytes() == (out2 / "observations.csv").read_bytes()
        assert (out1 / "observations.json").read_bytes() == (out2 / "observations.json").read_bytes()

    def test_unsafe_point_cited(self, tmp_path, capsys):
        cfg = ExperimentConfig(preset="generic", order=4, t_final=0.1, dt=1e-2,
                               y=math.pi / 2)
        save_config(cfg, tmp_path / "c.json")
        code = main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        diag = json.loads(err.strip())
        assert "sin" in diag["message"]  # cites the non-vanishing condition
        assert diag["error"] == "DomainError"

    def test_seed_and_preset_overrides(self, tmp_path):
        cfg = ExperimentConfig(preset="generic", order=4, t_final=0.1, dt=1e-2, seed=0)
        save_config(cfg, tmp_path / "c.json")
        main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path),
              "--preset", "decay1", "--seed", "9"])
        obs, meta = read_observations(tmp_path / "observations.csv")
        assert meta["preset"] == "decay1"
        assert meta["seed"] == 9

    def test_runs_without_config_file(self, tmp_path):
        # all-defaults invocation: the built-in generic preset
        assert main(["simulate", "--out", str(tmp_path)]) == 0
        obs, meta = read_observations(tmp_path / "observations.csv")
        assert obs.u1.n == 6001
        assert meta["preset"] == "generic"

    def test_invalid_config_exits_with_diagnostic(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"preset": "generic", "no_such_key": true}')
        code = main(["simulate", "--config", str(bad), "--out", str(tmp_path)])
        assert code == 2
        diag = json.loads(capsys.readouterr().err.strip())
        assert diag["error"] == "ConfigError"
        assert "no_such_key" in diag["message"]


class TestCliInvert:
    def _simulate(self, tmp_path, **overrides):
        params = dict(preset="decay1", order=4, t_final=4.0, dt=1e-3, depth=2)
        params.update(overrides)
        cfg = ExperimentConfig(**params)
        save_config(cfg, tmp_path / "c.json")
        assert main(["simulate", "--config", str(tmp_path / "c.json"),
                     "--out", str(tmp_path)]) == 0
        return tmp_path / "observations.csv", tmp_path / "c.json"

    def test_round_trip_report(self, tmp_path, capsys):
        obs_path, cfg_path = self._simulate(tmp_path)
        code = main(["invert", str(obs_path), "--config", str(cfg_path),
                     "--out", str(tmp_path)])
        assert code == 0
        report = (tmp_path / "report.txt").read_text()
        assert "-3.395305452627e+00" in report  # determinant to 12 digits
        rec = json.loads((tmp_path / "reconstruction.json").read_text())
        assert rec["g_coeffs"][0] == pytest.approx(1.0, abs=1e-6)
        assert rec["g1"] == 1.0
        csv_lines = (tmp_path / "reconstruction.csv").read_text().splitlines()
        assert csv_lines[2] == "t,v_hat,h_hat"

    def test_truncated_input_clean_failure(self, tmp_path, capsys):
        obs_path, cfg_path = self._simulate(tmp_path)
        lines = obs_path.read_text().splitlines()
        short = tmp_path / "short.csv"
        short.write_text("\n".join(lines[:5]) + "\n")  # 3 data rows
        code = main(["invert", str(short), "--config", str(cfg_path),
                     "--out", str(tmp_path)])
        assert code == 2
        diag = json.loads(capsys.readouterr().err.strip())
        assert diag["stage"] == "recover_vh"
        assert "too short" in diag["message"]

    def test_invert_rerun_byte_identical(self, tmp_path):
        obs_path, cfg_path = self._simulate(tmp_path)
        a, b = tmp_path / "ra", tmp_path / "rb"
        main(["invert", str(obs_path), "--config", str(cfg_path), "--out", str(a)])
        main(["invert", str(obs_path), "--config", str(cfg_path), "--out", str(b)])
        for name in ("reconstruction.json", "reconstruction.csv", "report.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_meta_order_wins_over_config(self, tmp_path):
        # observations generated with order 8; invert config says 16: the
        # file's truncation must be reused so the forced tails cancel
        obs_path, _ = self._simulate(tmp_path, preset="generic", order=8)
        cfg2 = ExperimentConfig(preset="generic", order=16, t_final=4.0, dt=1e-3, depth=2)
        save_config(cfg2, tmp_path / "c16.json")
        code = main(["invert", str(obs_path), "--config", str(tmp_path / "c16.json"),
                     "--out", str(tmp_path)])
        assert code == 0
        rec = json.loads((tmp_path / "reconstruction.json").read_text())
        assert rec["provenance"]["order"] == 8
        assert rec["g_sin_amplitudes"][0] == pytest.approx(1.0, abs=1e-3)


class TestCliStudy:
    def test_single_row_matches_invert(self, tmp_path):
        cfg = ExperimentConfig(preset="fourmode", order=8, t_final=2.0, dt=2e-3,
                               depth=4, levels=(0.0,), trials=1)
        save_config(cfg, tmp_path / "c.json")
        assert main(["study", "--config", str(tmp_path / "c.json"),
                     "--out", str(tmp_path)]) == 0
        study = json.loads((tmp_path / "study.json").read_text())
        assert study["trials"] == 1
        assert study["n_failed"] == 0

        # direct pipeline with the same inversion config gives the same metrics
        from heatinv import invert

        p = cfg.make_problem()
        rec = invert(make_observations(p, cfg.y), cfg.inversion_config())
        b_true = np.asarray(study["b_true"])
        expect = np.abs(rec.b_hat - b_true)
        got = np.asarray(study["per_level"]["0.0"]["mean_b_err"])
        np.testing.assert_allclose(got, expect, atol=1e-15)

    def test_outputs_and_determinism(self, tmp_path):
        cfg = ExperimentConfig(preset="fourmode", order=8, t_final=2.0, dt=2e-3,
                               depth=4, levels=(0.0, 1e-5), trials=2, seed=4)
        save_config(cfg, tmp_path / "c.json")
        a, b = tmp_path / "a", tmp_path / "b"
        main(["study", "--config", str(tmp_path / "c.json"), "--out", str(a)])
        main(["study", "--config", str(tmp_path / "c.json"), "--out", str(b)])
        for name in ("study.csv", "study.json", "error_vs_mode.dat", "error_vs_level.dat"):
            assert (a / name).exists()
            assert (a / name).read_bytes() == (b / name).read_bytes()
        head = (a / "study.csv").read_text().splitlines()
        assert head[2].startswith("level,trial,seed,ok,v_rel_l2,h_rel_l2")
