import json

import numpy as np
import pytest

from coordsim import cli
from coordsim import region as region_mod
from coordsim.probkit import CondPmf, Pmf
from coordsim.region import RegionQuery, SolverOptions
from coordsim.runspec import SpecError, load_runspec, parse_runspec


def base_spec():
    return {
        "alphabets": {"x_size": 2, "y_size": 2},
        "source": {"p0": [0.5, 0.5],
                   "obs_channel": [[0.8, 0.2], [0.2, 0.8]]},
        "target": {"p_y_given_x": [[0.71, 0.29], [0.29, 0.71]]},
        "scheme": {"kind": "direct", "rates": [0.25],
                   "epsilons": {"typicality": 0.4, "slacks": [0.1]},
                   "aux_channel": [[0.85, 0.15], [0.15, 0.85]]},
        "experiment": {"n_list": [20], "L_list": [1], "trials": 25,
                       "seed": 11, "delta_list": [0.2], "budget": 10000},
        "region": {"delta_grid": [0.0, 0.1, 0.5],
                   "solver": {"grid_step": 0.05, "restarts": 20, "seed": 4}},
    }


def write_spec(tmp_path, document, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


class TestRunSpecParsing:
    def test_valid_spec_parses(self):
        spec = parse_runspec(base_spec())
        assert spec.x_size == 2
        assert spec.rates == (0.25,)
        assert spec.region_delta_grid == (0.0, 0.1, 0.5)

    def test_missing_section_rejected(self):
        document = base_spec()
        del document["target"]
        with pytest.raises(SpecError):
            parse_runspec(document)

    def test_non_stochastic_matrix_rejected(self):
        document = base_spec()
        document["source"]["obs_channel"] = [[0.9, 0.2], [0.2, 0.8]]
        with pytest.raises(SpecError):
            parse_runspec(document)

    def test_bits_units_converted(self):
        document = base_spec()
        document["units"] = "bits"
        spec = parse_runspec(document)
        assert spec.rates[0] == pytest.approx(0.25 * np.log(2))
        assert spec.epsilons["slacks"][0] == pytest.approx(0.1 * np.log(2))
        # the typicality tolerance is unitless and untouched
        assert spec.epsilons["typicality"] == pytest.approx(0.4)

    def test_binned_scheme_config(self):
        document = base_spec()
        document["scheme"] = {"kind": "binned", "rates": [0.3, 0.2],
                              "epsilons": {"typicality": 0.4, "ag": 0.05,
                                           "zero": 0.02}}
        spec = parse_runspec(document)
        scheme = spec.scheme_config(2, spec.aux_channel or CondPmf.identity(2))
        assert scheme.rate_bin == pytest.approx(0.3)
        assert scheme.slack_word == pytest.approx(0.02)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(SpecError):
            load_runspec(str(tmp_path / "missing.json"))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SpecError):
            load_runspec(str(path))


class TestSimulateCommand:
    def test_minimal_spec_writes_rows(self, tmp_path):
        spec_path = write_spec(tmp_path, base_spec())
        out = tmp_path / "out.csv"
        assert cli.cmd_simulate(spec_path, str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#")
        header = lines[2].split(",")
        assert header == list(cli.SIMULATE_COLUMNS)
        assert len(lines) == 3 + 1  # one grid cell

    def test_malformed_spec_exit_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        assert cli.cmd_simulate(str(path), str(tmp_path / "x.csv")) == 2

    def test_schema_violation_exit_2(self, tmp_path):
        document = base_spec()
        document["experiment"]["trials"] = 0
        spec_path = write_spec(tmp_path, document)
        assert cli.cmd_simulate(spec_path, str(tmp_path / "x.csv")) == 2

    def test_decoder_limit_exit_3(self, tmp_path):
        document = base_spec()
        document["scheme"] = {"kind": "binned", "rates": [0.25, 0.15],
                              "epsilons": {"typicality": 0.4, "ag": 0.0,
                                           "zero": 0.0}}
        document["experiment"]["n_list"] = [30]  # beyond the decoder cap
        spec_path = write_spec(tmp_path, document)
        assert cli.cmd_simulate(spec_path, str(tmp_path / "x.csv")) == 3

    def test_replay_is_byte_identical(self, tmp_path):
        spec_path = write_spec(tmp_path, base_spec())
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert cli.cmd_simulate(spec_path, str(out1), workers=1) == 0
        assert cli.cmd_simulate(spec_path, str(out2), workers=2) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        spec_path = write_spec(tmp_path, base_spec())
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert cli.cmd_simulate(spec_path, str(out1)) == 0
        assert cli.cmd_simulate(spec_path, str(out2), seed_override=99) == 0
        assert out1.read_bytes() != out2.read_bytes()

    def test_solver_derived_aux_channel(self, tmp_path):
        # without scheme.aux_channel the region solver picks the codebook law
        # per delta; the path must stay byte-deterministic
        document = base_spec()
        del document["scheme"]["aux_channel"]
        document["experiment"]["n_list"] = [16]
        document["experiment"]["trials"] = 10
        document["experiment"]["delta_list"] = [0.3]
        spec_path = write_spec(tmp_path, document)
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert cli.cmd_simulate(spec_path, str(out1)) == 0
        assert cli.cmd_simulate(spec_path, str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert len(out1.read_text().splitlines()) == 4

    def test_timings_flag_populates_wall_column(self, tmp_path):
        spec_path = write_spec(tmp_path, base_spec())
        out = tmp_path / "a.csv"
        assert cli.cmd_simulate(spec_path, str(out), timings=True) == 0
        row = out.read_text().splitlines()[3].split(",")
        assert row[-1] != ""
        assert float(row[-1]) >= 0.0


class TestRegionCommand:
    def test_region_csv_matches_library(self, tmp_path):
        document = base_spec()
        spec_path = write_spec(tmp_path, document)
        out = tmp_path / "region.csv"
        assert cli.cmd_region(spec_path, str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1].startswith("# delta_min=")
        assert lines[2].split(",") == list(cli.REGION_COLUMNS)

        query = RegionQuery(p0=Pmf([0.5, 0.5]),
                            obs_channel=CondPmf(np.array(document["source"]["obs_channel"])),
                            target=CondPmf(np.array(document["target"]["p_y_given_x"])))
        options = SolverOptions(grid_step=0.05, restarts=20, seed=4)
        curve = region_mod.rate_delta_curve(query, document["region"]["delta_grid"],
                                            options)
        for line, point in zip(lines[3:], curve):
            fields = line.split(",")
            assert float(fields[0]) == pytest.approx(point.delta)
            assert float(fields[1]) == pytest.approx(point.per_agent.rate, abs=1e-9)
            assert float(fields[2]) == pytest.approx(point.finite.rate, abs=1e-9)

    def test_region_requires_section(self, tmp_path):
        document = base_spec()
        del document["region"]
        spec_path = write_spec(tmp_path, document)
        assert cli.cmd_region(spec_path, str(tmp_path / "r.csv")) == 2


class TestVerifyCommand:
    def test_subset_passes(self, capsys):
        assert cli.cmd_verify(only=["AC4"]) == 0
        out = capsys.readouterr().out
        assert "AC4" in out and "PASS" in out

    def test_reports_failure_exit_code(self, monkeypatch, capsys):
        from coordsim import verify

        def broken():
            return verify.CheckResult("AC4", False, "tampered tolerance", 0.0)

        monkeypatch.setattr(verify, "_CHECKS", (("AC4", broken),))
        assert cli.cmd_verify(only=["AC4"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_spec_validation_still_applies(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        assert cli.cmd_verify(spec_path=str(path)) == 2


class TestMainEntry:
    def test_simulate_subcommand(self, tmp_path):
        spec_path = write_spec(tmp_path, base_spec())
        out = tmp_path / "out.csv"
        code = cli.main(["simulate", "--spec", spec_path, "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_verify_subcommand(self):
        assert cli.main(["verify", "--only", "AC4"]) == 0

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main([])
