"""End-to-end checks of the batch front end: parsing, dispatch, exit codes."""

import json
import os

import pytest

from ellt.cli import ConfigError, JobConfig, load_config, main

E1 = {"curve": {"a": "-1", "b": "0"}}


def write_config(tmp_path, payload, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def run_cli(tmp_path, command, payload, *extra):
    return main([command, "--config", write_config(tmp_path, payload), *extra])


def run_json(tmp_path, capsys, command, payload, *extra):
    code = run_cli(tmp_path, command, payload, *extra)
    assert code == 0, capsys.readouterr().err
    return json.loads(capsys.readouterr().out)


class TestConfigParsing:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="mystery"):
            JobConfig("dims", {**E1, "mystery": 1})

    def test_unknown_curve_key(self):
        with pytest.raises(ConfigError, match="curve"):
            JobConfig("dims", {"curve": {"a": "1", "b": "0", "c": "2"}})

    def test_curve_needs_both_coefficients(self):
        with pytest.raises(ConfigError, match="both"):
            JobConfig("dims", {"curve": {"a": "1"}})

    def test_floats_are_refused(self):
        with pytest.raises(ConfigError, match="p/q"):
            JobConfig("dims", {"curve": {"a": 0.5, "b": "0"}})

    def test_bad_rational_string(self):
        with pytest.raises(ConfigError, match="rational"):
            JobConfig("dims", {"curve": {"a": "one half", "b": "0"}})

    def test_command_mismatch(self):
        with pytest.raises(ConfigError, match="invoked"):
            JobConfig("dims", {**E1, "command": "basis"})

    def test_matching_command_echo_is_fine(self):
        assert JobConfig("dims", {**E1, "command": "dims"}).command == "dims"

    def test_only_xy_coordinate_form(self):
        with pytest.raises(ConfigError, match="x/y"):
            JobConfig("dims", {**E1, "coordinate": {"form": "weierstrass"}})

    def test_zero_scale_rejected(self):
        with pytest.raises(ConfigError, match="nonzero"):
            JobConfig("dims", {**E1, "coordinate": {"scale": "0"}})

    def test_csv_only_for_dimension_tables(self):
        with pytest.raises(ConfigError, match="csv"):
            JobConfig("basis", {**E1, "format": "csv"})
        assert JobConfig("coeff", {**E1, "format": "csv"}).fmt == "csv"

    def test_bool_is_not_an_integer_weight(self, tmp_path):
        code = run_cli(tmp_path, "dims", {**E1, "params": {"W": {"1": True}}})
        assert code == 1

    def test_missing_config_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("dims", "/nonexistent/job.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="valid JSON"):
            load_config("dims", str(path))


class TestDims:
    def test_single_weight_report(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "dims", {**E1, "params": {"W": {"1": 1}}})
        assert list(rep) == ["command", "curve", "coordinate", "variance", "W",
                             "h0", "h1", "h0_basis", "certified_caps"]
        assert (rep["h0"], rep["h1"]) == (1, 0)
        assert rep["h0_basis"] == ["([1]; []; [1])"]

    def test_cohomology_variance(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "dims",
                       {**E1, "params": {"W": {"1": 1}, "variance": "cohomology"}})
        assert (rep["h0"], rep["h1"]) == (0, 1)

    def test_undersized_caps_exit_two(self, tmp_path):
        code = run_cli(tmp_path, "dims",
                       {**E1, "params": {"W": {"3": 2}, "caps": {"1": 2}}})
        assert code == 2

    def test_missing_weights_is_a_config_error(self, tmp_path):
        assert run_cli(tmp_path, "dims", {**E1, "params": {}}) == 1

    def test_needs_a_curve(self, tmp_path):
        assert run_cli(tmp_path, "dims", {"params": {"W": {"1": 1}}}) == 1

    def test_csv_table(self, tmp_path, capsys):
        code = run_cli(tmp_path, "dims",
                       {**E1, "format": "csv", "params": {"W": {"2": 1}}})
        assert code == 0
        assert capsys.readouterr().out == "h0,h1\n4,0\n"


class TestBasisAndCoeff:
    def test_basis_of_a_double_point(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "basis",
                       {**E1, "params": {"divisor": {"1": 2}}})
        assert rep["dim"] == 2
        assert rep["basis"] == ["([1]; []; [1])", "([0, 1]; []; [1])"]

    def test_negative_divisor_has_empty_basis(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "basis",
                       {**E1, "params": {"divisor": {"1": -1}}})
        assert rep["dim"] == 0 and rep["basis"] == []

    def test_coeff_csv_is_byte_stable(self, tmp_path, capsys):
        cfg = {**E1, "format": "csv", "params": {"d_min": -2, "d_max": 2}}
        assert run_cli(tmp_path, "coeff", cfg) == 0
        assert capsys.readouterr().out == (
            "degree,dim,witness\n"
            "-2,1,Dt^-1\n"
            "-1,1,tau\n"
            "0,1,1\n"
            "1,1,tau*Dt\n"
            "2,1,Dt\n"
        )

    def test_coeff_json_rows(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "coeff", {**E1, "params": {}})
        assert rep["d_min"] == -4 and rep["d_max"] == 4
        assert all(row["dim"] == 1 for row in rep["rows"])


class TestDivpoly:
    def test_level_three(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "divpoly", {**E1, "params": {"n": 3}})
        assert rep["psi"] == "([-1, 0, -6, 0, 3]; []; [1])"
        assert rep["scalar"] == "3"
        assert rep["ord_e"] == -8
        assert rep["t_factors"] == {"3": "([-1/3, 0, -2, 0, 1]; []; [1])"}
        assert rep["factorization_ok"] is True

    def test_level_six_has_three_factors(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "divpoly", {**E1, "params": {"n": 6}})
        assert sorted(rep["t_factors"]) == ["2", "3", "6"]
        assert rep["ord_e"] == -35


class TestKmodel:
    def test_multiplicative_products(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "kmodel",
                       {"params": {"group": "multiplicative", "W": {"1": 1},
                                   "products_upto": 12}})
        assert rep["rank"] == 1 and rep["odd_dim"] == 0
        assert rep["generator"] == "[-1] / [-1, 1]"
        assert rep["euler"] == "[1, -1] / [1]"
        assert rep["products_ok_upto"] == 12
        assert rep["phi"]["6"] == "[1, -1, 1]"

    def test_dual_sphere_generator_is_the_euler_class(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "kmodel",
                       {"params": {"group": "multiplicative", "W": {"2": 1},
                                   "sign": -1}})
        assert rep["generator"] == rep["euler"] == "[1, 0, -1] / [1]"

    def test_additive_factors_are_constants(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "kmodel",
                       {"params": {"group": "additive", "products_upto": 8}})
        for s, text in rep["phi"].items():
            if int(s) >= 2:
                assert "," not in text, f"phi_{s} = {text} is not constant"

    def test_zero_multiplicity_is_a_config_error(self, tmp_path):
        code = run_cli(tmp_path, "kmodel",
                       {"params": {"group": "multiplicative", "W": {"1": 0}}})
        assert code == 1

    def test_unknown_group(self, tmp_path):
        assert run_cli(tmp_path, "kmodel", {"params": {"group": "formal"}}) == 1


class TestOtherCommands:
    def test_completion(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "completion", {**E1, "params": {"k": 3}})
        assert rep["dim"] == 3
        assert rep["nilpotency_order"] == 3
        assert rep["action"][0] == ["0", "0", "0"]

    def test_localcoh(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "localcoh",
                       {**E1, "params": {"pi": [2], "a": 1}})
        assert rep["dim"] == 4 and rep["degree"] == "odd"

    def test_serre(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "serre",
                       {**E1, "params": {"divisor": {"1": 1}}})
        assert rep["rank"] == rep["dim"] == 1
        assert rep["nondegenerate"] is True
        assert rep["matrix"] == [["1"]]

    def test_degenerate_serre_exits_three(self, tmp_path):
        assert run_cli(tmp_path, "serre", {**E1, "params": {"divisor": {}}}) == 3

    def test_sections(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "sections",
                       {**E1, "params": {"divisor": {}, "pi": [1], "cap": 3}})
        assert rep["dim"] == 3
        assert rep["pi"] == [1] and rep["cap"] == 3

    def test_glue(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "glue",
                       {**E1, "params": {"divisor": {}, "left": [1],
                                         "right": [2], "cap": 2}})
        assert rep["ok"] is True and rep["coker"] == 1

    def test_roundtrip(self, tmp_path, capsys):
        rep = run_json(tmp_path, capsys, "roundtrip",
                       {**E1, "params": {"W": {"2": 1}, "caps": [0, 1]}})
        assert rep["ok"] is True
        assert rep["D"] == {"1": 1, "2": 1}


class TestCacheAdmin:
    def test_warm_verify_clear_cycle(self, tmp_path, capsys):
        cache = str(tmp_path / "psi.json")
        cfg = {**E1, "cache_path": cache}

        rep = run_json(tmp_path, capsys, "cache",
                       {**cfg, "params": {"action": "warm", "upto": 6}})
        assert rep["entries"] == 6 and os.path.exists(cache)
        first = open(cache, "rb").read()

        code = run_cli(tmp_path, "cache",
                       {**cfg, "params": {"action": "verify"}}, "--out",
                       str(tmp_path / "v.json"))
        assert code == 0
        assert json.load(open(tmp_path / "v.json"))["ok"] is True

        # determinism: clearing and rewarming reproduces the bytes
        run_json(tmp_path, capsys, "cache", {**cfg, "params": {"action": "clear"}})
        assert not os.path.exists(cache)
        run_json(tmp_path, capsys, "cache",
                 {**cfg, "params": {"action": "warm", "upto": 6}})
        assert open(cache, "rb").read() == first

    def test_corruption_is_caught(self, tmp_path, capsys):
        cache = str(tmp_path / "psi.json")
        cfg = {**E1, "cache_path": cache}
        run_json(tmp_path, capsys, "cache",
                 {**cfg, "params": {"action": "warm", "upto": 4}})
        blob = json.load(open(cache))
        blob["psi"]["3"][0] = "[1, 0, -6, 0, 3]"
        json.dump(blob, open(cache, "w"))
        assert run_cli(tmp_path, "cache", {**cfg, "params": {"action": "verify"}}) == 3

    def test_verify_rejects_foreign_curve(self, tmp_path, capsys):
        cache = str(tmp_path / "psi.json")
        run_json(tmp_path, capsys, "cache",
                 {**E1, "cache_path": cache, "params": {"action": "warm", "upto": 3}})
        other = {"curve": {"a": "0", "b": "1"}, "cache_path": cache}
        assert run_cli(tmp_path, "cache", {**other, "params": {"action": "verify"}}) == 3

    def test_commands_ignore_foreign_cache(self, tmp_path, capsys):
        # a cache for another curve must not contaminate the run
        cache = str(tmp_path / "psi.json")
        run_json(tmp_path, capsys, "cache",
                 {"curve": {"a": "0", "b": "1"}, "cache_path": cache,
                  "params": {"action": "warm", "upto": 4}})
        rep = run_json(tmp_path, capsys, "divpoly",
                       {**E1, "cache_path": cache, "params": {"n": 3}})
        assert rep["psi"] == "([-1, 0, -6, 0, 3]; []; [1])"

    def test_env_var_supplies_the_path(self, tmp_path, capsys, monkeypatch):
        cache = str(tmp_path / "env.json")
        monkeypatch.setenv("ELLT_CACHE", cache)
        run_json(tmp_path, capsys, "cache",
                 {**E1, "params": {"action": "warm", "upto": 3}})
        assert os.path.exists(cache)

    def test_missing_path_is_a_config_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("ELLT_CACHE", raising=False)
        assert run_cli(tmp_path, "cache", {**E1, "params": {"action": "warm"}}) == 1


class TestOutput:
    def test_out_flag_overrides_config(self, tmp_path, capsys):
        target = tmp_path / "flag.json"
        decoy = tmp_path / "decoy.json"
        cfg = {**E1, "output_path": str(decoy), "params": {"W": {"1": 1}}}
        assert run_cli(tmp_path, "dims", cfg, "--out", str(target)) == 0
        assert target.exists() and not decoy.exists()
        assert json.loads(target.read_text())["h0"] == 1

    def test_config_output_path(self, tmp_path, capsys):
        target = tmp_path / "report.json"
        cfg = {**E1, "output_path": str(target), "params": {"W": {"1": 1}}}
        assert run_cli(tmp_path, "dims", cfg) == 0
        assert json.loads(target.read_text())["h1"] == 0

    def test_reports_are_byte_identical(self, tmp_path, capsys):
        cfg = {**E1, "params": {"W": {"1": 1, "3": 1}}}
        run_cli(tmp_path, "dims", cfg)
        first = capsys.readouterr().out
        run_cli(tmp_path, "dims", cfg)
        assert capsys.readouterr().out == first

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_unknown_command_exits_one(self, capsys):
        assert main(["transmogrify", "--config", "x.json"]) == 1
