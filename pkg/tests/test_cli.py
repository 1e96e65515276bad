import json
import math

import pytest

from sbnrg.bath import chain_map, discretize
from sbnrg.circuit import SpinBosonParams
from sbnrg.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigError,
    config_echo,
    execute,
    main,
    parse_config,
)
from sbnrg.nrg import NrgConfig, run
from sbnrg.oracle import EdProblem, exact_diag


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


RUN_PAYLOAD = {
    "model": {"delta": 0.05, "alpha": 0.3},
    "nrg": {"n_s": 40, "n_b": 4, "n_iter": 8},
}


class TestParseConfig:
    def test_minimal_run(self):
        cfg = parse_config(json.dumps(RUN_PAYLOAD), mode="run")
        assert cfg.model.delta == 0.05
        assert cfg.model.alpha == 0.3
        assert cfg.nrg_config.n_s == 40
        assert cfg.workers == 1

    def test_nrg_defaults_applied(self):
        cfg = parse_config(json.dumps({"model": {"delta": 0.1}}), mode="run")
        assert cfg.nrg_config == NrgConfig()

    def test_lambda_key_maps_to_ratio(self):
        payload = {"model": {"delta": 0.1}, "nrg": {"lambda": 3.0}}
        cfg = parse_config(json.dumps(payload), mode="run")
        assert cfg.nrg_config.Lambda == 3.0

    def test_mode_echo_must_match(self):
        payload = dict(RUN_PAYLOAD, mode="sweep")
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config(json.dumps(payload), mode="run")
        ok = parse_config(json.dumps(dict(RUN_PAYLOAD, mode="run")), mode="run")
        assert ok.mode == "run"

    def test_unknown_top_key(self):
        with pytest.raises(ConfigError, match="unknown key extras"):
            parse_config(json.dumps(dict(RUN_PAYLOAD, extras={})), mode="run")

    def test_unknown_nested_key_has_path(self):
        payload = {"model": {"delta": 0.1, "beta": 1.0}}
        with pytest.raises(ConfigError, match="model.beta"):
            parse_config(json.dumps(payload), mode="run")

    def test_non_strict_ignores_unknown(self):
        payload = {"model": {"delta": 0.1, "beta": 1.0}, "extras": {}}
        cfg = parse_config(json.dumps(payload), mode="run", strict=False)
        assert cfg.model.delta == 0.1

    def test_type_errors(self):
        bad_float = {"model": {"delta": "0.1"}}
        with pytest.raises(ConfigError, match="must be a number"):
            parse_config(json.dumps(bad_float), mode="run")
        bool_as_int = {"model": {"delta": 0.1}, "nrg": {"n_s": True}}
        with pytest.raises(ConfigError, match="must be an integer"):
            parse_config(json.dumps(bool_as_int), mode="run")
        float_as_int = {"model": {"delta": 0.1}, "nrg": {"n_iter": 6.5}}
        with pytest.raises(ConfigError, match="must be an integer"):
            parse_config(json.dumps(float_as_int), mode="run")

    def test_invalid_json(self):
        with pytest.raises(ConfigError, match="JSON"):
            parse_config("{not json", mode="run")

    def test_root_must_be_object(self):
        with pytest.raises(ConfigError):
            parse_config("[1, 2]", mode="run")

    def test_model_required(self):
        with pytest.raises(ConfigError, match="model"):
            parse_config("{}", mode="run")

    def test_invalid_model_value(self):
        with pytest.raises(ConfigError, match="model"):
            parse_config(json.dumps({"model": {"delta": -1.0}}), mode="run")

    def test_invalid_nrg_value(self):
        payload = {"model": {"delta": 0.1}, "nrg": {"n_s": 1}}
        with pytest.raises(ConfigError, match="nrg"):
            parse_config(json.dumps(payload), mode="run")

    def test_workers_floor(self):
        with pytest.raises(ConfigError, match="workers"):
            parse_config(json.dumps(RUN_PAYLOAD), mode="run", workers=0)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            parse_config(json.dumps(RUN_PAYLOAD), mode="anneal")

    def test_sweep_grid_values(self):
        payload = {
            "model": {"delta": 0.05},
            "sweep": {"parameter": "alpha",
                      "grid": {"values": [0.1, 0.2, 0.4]}},
        }
        cfg = parse_config(json.dumps(payload), mode="sweep")
        assert cfg.sweep.parameter == "alpha"
        assert cfg.sweep.values == (0.1, 0.2, 0.4)

    def test_sweep_grid_range(self):
        payload = {
            "model": {"delta": 0.05},
            "sweep": {"parameter": "epsilon",
                      "grid": {"from": 0.0, "to": 0.4, "step": 0.1}},
        }
        cfg = parse_config(json.dumps(payload), mode="sweep")
        assert len(cfg.sweep.values) == 5
        assert cfg.sweep.values[-1] == pytest.approx(0.4)

    def test_sweep_grid_errors(self):
        base = {"model": {"delta": 0.05}}

        def sweep(grid):
            return json.dumps(dict(base, sweep={"parameter": "alpha",
                                                "grid": grid}))

        with pytest.raises(ConfigError, match="does not divide"):
            parse_config(sweep({"from": 0.0, "to": 1.0, "step": 0.3}),
                         mode="sweep")
        with pytest.raises(ConfigError, match="monotone"):
            parse_config(sweep({"values": [0.1, 0.3, 0.2]}), mode="sweep")
        with pytest.raises(ConfigError, match="non-empty"):
            parse_config(sweep({"values": []}), mode="sweep")
        with pytest.raises(ConfigError, match="non-zero"):
            parse_config(sweep({"from": 0.0, "to": 1.0, "step": 0.0}),
                         mode="sweep")
        with pytest.raises(ConfigError, match="'values' or 'from'"):
            parse_config(sweep({"lo": 0.0}), mode="sweep")

    def test_sweep_parameter_whitelist(self):
        payload = {
            "model": {"delta": 0.05},
            "sweep": {"parameter": "s", "grid": {"values": [0.5, 0.9]}},
        }
        with pytest.raises(ConfigError, match="sweep.parameter"):
            parse_config(json.dumps(payload), mode="sweep")

    def test_critical_sweeps_alpha_only(self):
        payload = {
            "model": {"delta": 0.05},
            "sweep": {"parameter": "delta",
                      "grid": {"values": [0.01, 0.02, 0.04, 0.08]}},
        }
        with pytest.raises(ConfigError, match="alpha only"):
            parse_config(json.dumps(payload), mode="critical")

    def test_critical_block(self):
        payload = {
            "model": {"delta": 0.05},
            "sweep": {"parameter": "alpha",
                      "grid": {"values": [0.1, 0.2, 0.3, 0.4]}},
            "critical": {"threshold": 0.25, "window": 4.0},
        }
        cfg = parse_config(json.dumps(payload), mode="critical")
        assert cfg.critical.threshold == 0.25
        assert cfg.critical.window == 4.0

    def test_map_circuit_required_fields(self):
        payload = {"circuit": {"c_j": 1e-12, "c_0": 1e-12, "i_0": 2e-6,
                               "i_b": 1e-6, "l": 4e-7}}
        with pytest.raises(ConfigError, match="circuit.c"):
            parse_config(json.dumps(payload), mode="map-circuit")

    def test_map_circuit_convention_check(self):
        payload = {"circuit": {"c_j": 1e-12, "c_0": 1e-12, "i_0": 2e-6,
                               "i_b": 1e-6, "l": 4e-7, "c": 1.6e-10,
                               "delta_convention": "zeeman"}}
        with pytest.raises(ConfigError, match="delta_convention"):
            parse_config(json.dumps(payload), mode="map-circuit")

    def test_oracle_modes_validation(self):
        payload = {"oracle": {"delta": 0.2, "modes": [[0.5, 0.1], [0.25]]}}
        with pytest.raises(ConfigError, match=r"oracle.modes\[1\]"):
            parse_config(json.dumps(payload), mode="oracle")

    def test_config_echo_roundtrip(self):
        payload = {
            "model": {"delta": 0.05},
            "nrg": {"lambda": 2.5, "n_iter": 10},
            "sweep": {"parameter": "alpha",
                      "grid": {"values": [0.1, 0.2, 0.3, 0.4]}},
        }
        cfg = parse_config(json.dumps(payload), mode="critical",
                           out_dir="/tmp/x", workers=3)
        echo = config_echo(cfg)
        assert echo["mode"] == "critical"
        assert echo["workers"] == 3
        assert echo["nrg"]["lambda"] == 2.5
        assert "Lambda" not in echo["nrg"]
        assert echo["sweep"]["values"] == [0.1, 0.2, 0.3, 0.4]
        assert echo["critical"]["threshold"] == 0.3


class TestRunMode:
    def run_cli(self, tmp_path, payload, sub="run", extra=()):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, payload)
        code = main([sub, "--config", cfg, "--out", str(out), *extra])
        return code, out

    def test_outputs_and_manifest(self, tmp_path):
        code, out = self.run_cli(tmp_path, RUN_PAYLOAD)
        assert code == EXIT_OK
        flow = (out / "flow.csv").read_text()
        lines = flow.strip().split("\n")
        assert lines[0] == "iteration,level_index,scaled_energy"
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"
        assert float(first[2]) == 0.0
        obs = json.loads((out / "observables.json").read_text())
        ref = run(SpinBosonParams(delta=0.05, alpha=0.3),
                  NrgConfig(n_s=40, n_b=4, n_iter=8))
        assert obs["sigma_z"] == ref.sigma_z_gs
        assert obs["delta_p"] == ref.delta_p
        assert obs["chain_digest"] == ref.chain_digest
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["status"] == "ok"
        assert manifest["mode"] == "run"
        names = {entry["path"] for entry in manifest["outputs"]}
        assert names == {"flow.csv", "observables.json"}

    def test_manifest_digests_match_files(self, tmp_path):
        import hashlib
        code, out = self.run_cli(tmp_path, RUN_PAYLOAD)
        assert code == EXIT_OK
        manifest = json.loads((out / "run_manifest.json").read_text())
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"]

    def test_rerun_byte_identical(self, tmp_path):
        _, out1 = self.run_cli(tmp_path, RUN_PAYLOAD)
        cfg = write_config(tmp_path, RUN_PAYLOAD)
        out2 = tmp_path / "out2"
        main(["run", "--config", cfg, "--out", str(out2)])
        assert (out1 / "flow.csv").read_bytes() == (out2 / "flow.csv").read_bytes()
        assert (out1 / "observables.json").read_bytes() == \
            (out2 / "observables.json").read_bytes()

    def test_wrote_lines_printed(self, tmp_path, capsys):
        code, out = self.run_cli(tmp_path, RUN_PAYLOAD)
        assert code == EXIT_OK
        printed = capsys.readouterr().out
        assert f"wrote {out / 'flow.csv'}" in printed
        assert f"wrote {out / 'run_manifest.json'}" in printed


class TestChainMode:
    def test_csv_matches_library(self, tmp_path):
        payload = {"model": {"delta": 0.01, "alpha": 0.5},
                   "nrg": {"n_iter": 8}}
        out = tmp_path / "out"
        cfg = write_config(tmp_path, payload)
        assert main(["chain", "--config", cfg, "--out", str(out)]) == EXIT_OK
        star = discretize(SpinBosonParams(delta=0.01, alpha=0.5), 2.0, 16)
        chain = chain_map(star)
        lines = (out / "chain.csv").read_text().strip().split("\n")
        assert lines[0] == "n,xi,gamma,eps,t"
        assert len(lines) == 1 + 16
        row0 = lines[1].split(",")
        assert float(row0[1]) == float(star.xi[0])
        assert float(row0[2]) == float(star.gamma[0])
        assert float(row0[3]) == float(chain.eps[0])
        assert float(row0[4]) == float(chain.t[0])
        last = lines[-1].split(",")
        assert last[4] == ""  # no hopping out of the final site
        meta = json.loads((out / "chain.json").read_text())
        assert meta["digest"] == chain.digest()
        assert meta["n_sites"] == 16
        assert meta["c0"] == chain.c0


class TestMapCircuitMode:
    PAYLOAD = {"circuit": {
        "c_j": 0.85e-12, "c_0": 4.25e-12, "i_0": 2e-6, "i_b": 1.96e-6,
        "l": 4e-7, "c": 1.6e-10, "omega_c": 1e14,
        "delta_convention": "half_omega_p", "i_uw": 1e-9,
        "line_length": 1.0, "n_modes": 3,
    }}

    def test_payload(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, self.PAYLOAD)
        assert main(["map-circuit", "--config", cfg, "--out", str(out)]) == EXIT_OK
        doc = json.loads((out / "circuit.json").read_text())
        assert doc["qubit"]["omega_p"] == pytest.approx(15437501819.022846,
                                                        rel=1e-12)
        assert doc["spin_boson"]["alpha"] == pytest.approx(
            0.4350857322842646, rel=1e-12
        )
        assert doc["spin_boson"]["delta_convention"] == "half_omega_p"
        assert doc["bias_j"] == pytest.approx(2.6551415630181494e-26,
                                              rel=1e-12)
        assert doc["bias"] == pytest.approx(
            doc["bias_j"] / (1.0545718176461565e-34 * 1e14), rel=1e-10
        )
        assert len(doc["line_modes"]) == 3
        assert doc["line_modes"][0]["n"] == 1

    def test_unphysical_circuit_is_config_error(self, tmp_path):
        bad = {"circuit": dict(self.PAYLOAD["circuit"], i_b=3e-6)}
        out = tmp_path / "out"
        cfg = write_config(tmp_path, bad)
        assert main(["map-circuit", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG


class TestOracleMode:
    def test_matches_library(self, tmp_path):
        payload = {"oracle": {"delta": 0.3, "epsilon": 0.1,
                              "modes": [[0.5, 0.2]], "n_max": 8}}
        out = tmp_path / "out"
        cfg = write_config(tmp_path, payload)
        assert main(["oracle", "--config", cfg, "--out", str(out)]) == EXIT_OK
        doc = json.loads((out / "oracle.json").read_text())
        ref = exact_diag(EdProblem(delta=0.3, epsilon=0.1,
                                   modes=((0.5, 0.2),), n_max=8))
        assert doc["ground_energy"] == ref.ground_energy
        assert doc["gap"] == ref.gap
        assert doc["sigma_z"] == ref.sigma_z
        assert doc["converged"] is True


class TestSweepMode:
    PAYLOAD = {
        "model": {"delta": 0.05},
        "nrg": {"n_s": 40, "n_b": 4, "n_iter": 10},
        "sweep": {"parameter": "alpha",
                  "grid": {"from": 0.2, "to": 0.4, "step": 0.1}},
    }

    def test_rows(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, self.PAYLOAD)
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        lines = (out / "sweep.csv").read_text().strip().split("\n")
        assert lines[0] == "alpha,delta,epsilon,n_star,delta_p,phase"
        assert len(lines) == 4
        row = lines[2].split(",")
        assert float(row[0]) == pytest.approx(0.3)
        assert float(row[1]) == 0.05
        ref = run(SpinBosonParams(delta=0.05, alpha=0.30000000000000004),
                  NrgConfig(n_s=40, n_b=4, n_iter=10))
        assert float(row[4]) == ref.delta_p
        assert row[5] in ("delocalized", "localized", "undetermined")

    def test_workers_do_not_change_bytes(self, tmp_path):
        cfg = write_config(tmp_path, self.PAYLOAD)
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        assert main(["sweep", "--config", cfg, "--out", str(out1),
                     "--workers", "1"]) == EXIT_OK
        assert main(["sweep", "--config", cfg, "--out", str(out2),
                     "--workers", "2"]) == EXIT_OK
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_no_crossing_writes_nan(self, tmp_path):
        payload = {
            "model": {"delta": 0.01},
            "nrg": {"n_s": 60, "n_b": 4, "n_iter": 20},
            "sweep": {"parameter": "alpha", "grid": {"values": [1.4]}},
        }
        out = tmp_path / "out"
        cfg = write_config(tmp_path, payload)
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        row = (out / "sweep.csv").read_text().strip().split("\n")[1].split(",")
        assert math.isnan(float(row[3]))


class TestCriticalMode:
    PAYLOAD = {
        "model": {"delta": 3e-5},
        "nrg": {"n_s": 60, "n_b": 6, "n_iter": 60, "n_star": 65},
        "sweep": {"parameter": "alpha",
                  "grid": {"values": [0.55, 0.65, 0.75, 0.85]}},
    }

    def test_end_to_end(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, self.PAYLOAD)
        assert main(["critical", "--config", cfg, "--out", str(out)]) == EXIT_OK
        for i in range(4):
            assert (out / f"flow_{i:03d}.csv").exists()
        pts = (out / "points.csv").read_text().strip().split("\n")
        assert pts[0] == "alpha,n_star"
        assert len(pts) == 5
        nstars = [float(line.split(",")[1]) for line in pts[1:]]
        assert nstars == sorted(nstars)
        fit = json.loads((out / "fit.json").read_text())
        assert fit["alpha_c"] == pytest.approx(1.2486868009632401, abs=1e-6)
        assert fit["n_points"] == 4
        assert fit["threshold"] == 0.3

    def test_localized_grid_exits_numerical(self, tmp_path):
        payload = {
            "model": {"delta": 0.01},
            "nrg": {"n_s": 60, "n_b": 4, "n_iter": 20},
            "sweep": {"parameter": "alpha",
                      "grid": {"values": [1.4, 1.45, 1.5, 1.55]}},
        }
        out = tmp_path / "out"
        cfg = write_config(tmp_path, payload)
        code = main(["critical", "--config", cfg, "--out", str(out)])
        assert code == EXIT_NUMERICAL
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["status"] == "failed"
        assert "failure" in manifest


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        code = main(["run", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_IO

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{broken")
        code = main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_CONFIG

    def test_unknown_key_strict_vs_lenient(self, tmp_path):
        payload = dict(RUN_PAYLOAD, extras={"note": 1})
        cfg = write_config(tmp_path, payload)
        assert main(["run", "--config", cfg,
                     "--out", str(tmp_path / "o1")]) == EXIT_CONFIG
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o2"),
                     "--no-strict"]) == EXIT_OK

    def test_out_path_is_file(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("x")
        cfg = write_config(tmp_path, RUN_PAYLOAD)
        code = main(["run", "--config", cfg, "--out", str(blocker)])
        assert code == EXIT_IO


class TestExecuteFailurePath:
    def test_manifest_written_then_raises(self, tmp_path):
        payload = {
            "model": {"delta": 0.01},
            "nrg": {"n_s": 60, "n_b": 4, "n_iter": 20},
            "sweep": {"parameter": "alpha",
                      "grid": {"values": [1.4, 1.45, 1.5, 1.55]}},
        }
        cfg = parse_config(json.dumps(payload), mode="critical",
                           out_dir=str(tmp_path / "out"))
        with pytest.raises(Exception):
            execute(cfg)
        manifest = json.loads(
            (tmp_path / "out" / "run_manifest.json").read_text()
        )
        assert manifest["status"] == "failed"
        assert "NoCrossingError" in manifest["failure"]
