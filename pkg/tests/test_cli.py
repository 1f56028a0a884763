"""Command-line frontend: config handling, subcommands, exit codes, outputs."""
import csv
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
import yaml

from nomasched.cli import (
    EXIT_INFEASIBLE,
    EXIT_INVALID,
    EXIT_MISSING_FILE,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_TIE,
    EXIT_USAGE,
    build_scenario,
    load_config,
    main,
    scenario_to_mapping,
)
from nomasched.core import ResourceLimitError

F = Fraction

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"
INSTANCE = CONFIGS / "two_user_discrete.txt"


def run_cli(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_yaml(path, mapping):
    path.write_text(yaml.safe_dump(mapping, sort_keys=False), encoding="utf-8")
    return path


def channel_mapping(**extra):
    """A small, fast channel scenario (deterministic seed, few slots)."""
    data = {
        "schema": 1,
        "users": 2,
        "nmax": 2,
        "slots": 1500,
        "seed": 3,
        "demands": {"lower": ["3/10", "3/10"]},
    }
    data.update(extra)
    return data


TIE_INSTANCE = """\
schema 1
users 2
nmax 2
vuser {1}
3/10 1
vuser {2}
3/10 1
vuser {1,2}
1/10 1
demands lower 1/4 1/4
lambda 0 0
"""


class TestConfigHandling:
    def test_missing_config_file(self, capsys):
        code, _, err = run_cli(["simulate", "--config", "/no/such/file.yaml"], capsys)
        assert code == EXIT_MISSING_FILE
        assert err.startswith("missing file: /no/such/file.yaml")

    def test_unknown_top_level_key(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(bogus=1))
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "config error: bogus: unknown key" in err

    def test_schema_key_required(self, tmp_path, capsys):
        data = channel_mapping()
        del data["schema"]
        cfg = write_yaml(tmp_path / "c.yaml", data)
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "schema: required versioned key" in err

    def test_unsupported_schema_version(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(schema=2))
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "schema: unsupported version 2" in err

    def test_yaml_suffix_must_be_mapping(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("just a string\n", encoding="utf-8")
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "config error: schema:" in err

    def test_unknown_channel_key(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(channel={"bogus": 1}))
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "config error: channel.bogus: unknown key" in err

    def test_instance_forbids_channel_sections(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": str(INSTANCE), "channel": {}},
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "channel: not available with a finite-support instance" in err

    def test_instance_forbids_benchmarks(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": str(INSTANCE), "benchmarks": ["rr"]},
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "benchmarks: channel scenarios only" in err

    def test_instance_pins_user_count(self, capsys):
        code, _, err = run_cli(
            ["simulate", "--config", INSTANCE, "--users", "3"], capsys
        )
        assert code == EXIT_INVALID
        assert "users: instance file has 2 users" in err

    def test_instance_path_resolved_against_config_dir(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": "table.txt", "slots": 200},
        )
        (tmp_path / "table.txt").write_text(INSTANCE.read_text(), encoding="utf-8")
        code, out, _ = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_OK
        assert out.startswith("primary utility ")

    def test_slots_flag_must_be_positive(self, capsys):
        code, _, err = run_cli(
            ["simulate", "--config", INSTANCE, "--slots", "0"], capsys
        )
        assert code == EXIT_INVALID
        assert "slots: must be at least 1, got 0" in err

    def test_seed_flag_must_be_nonnegative(self, capsys):
        code, _, err = run_cli(
            ["simulate", "--config", INSTANCE, "--seed", "-1"], capsys
        )
        assert code == EXIT_INVALID
        assert "seed: must be at least 0" in err

    def test_users_required_for_channel_scenarios(self, capsys):
        code, _, err = run_cli(
            ["simulate", "--config", CONFIGS / "defaults.yaml"], capsys
        )
        assert code == EXIT_INVALID
        assert "users: required (set it in the config or pass --users)" in err

    def test_demands_length_checked(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            channel_mapping(demands={"lower": ["1/10", "1/10", "1/10"]}),
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "demands.lower: expected 2 entries, got 3" in err

    def test_demands_must_be_rational(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml", channel_mapping(demands={"lower": ["zebra", 0]})
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "demands.lower[0]: not a rational number" in err

    def test_nmax_cannot_exceed_users(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(nmax=3))
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "config error: nmax:" in err

    def test_bad_rate_model_flag(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping())
        code, _, err = run_cli(
            ["simulate", "--config", cfg, "--rate-model", "nonsense"], capsys
        )
        assert code == EXIT_INVALID
        assert "rate_model: expected shannon|truncated|staircase:<path>" in err

    def test_missing_staircase_table(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping())
        code, _, err = run_cli(
            ["simulate", "--config", cfg, "--rate-model", "staircase:gone.txt"],
            capsys,
        )
        assert code == EXIT_MISSING_FILE
        assert err.startswith("missing file:")

    def test_staircase_table_resolved_against_config_dir(self, tmp_path, capsys):
        (tmp_path / "steps.txt").write_text("0.0 1.0\n10.0 2.0\n", encoding="utf-8")
        cfg = write_yaml(
            tmp_path / "c.yaml", channel_mapping(rate_model="staircase:steps.txt")
        )
        code, out, _ = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_OK
        assert out.startswith("primary utility ")


class TestUsageErrors:
    def test_no_arguments(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == EXIT_USAGE

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate", "--config", "x"])
        assert err.value.code == EXIT_USAGE

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as err:
            main(["simulate", "--config", "x", "--warp", "9"])
        assert err.value.code == EXIT_USAGE

    def test_config_flag_required(self):
        with pytest.raises(SystemExit) as err:
            main(["simulate"])
        assert err.value.code == EXIT_USAGE


class TestOracleCommand:
    def test_exact_lp_and_tbs_lines(self, capsys):
        code, out, _ = run_cli(["oracle", "--config", INSTANCE], capsys)
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "utility 9/32"
        assert "tbs lambda 1/10 0" in lines
        assert "tbs shares 1/2 3/4" in lines
        assert "tbs utility 9/32" in lines

    def test_threshold_override_changes_evaluation(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": str(INSTANCE), "thresholds": ["0", "0"]},
        )
        code, out, _ = run_cli(["oracle", "--config", cfg], capsys)
        assert code == EXIT_OK
        lines = out.splitlines()
        assert "tbs shares 1/4 1" in lines
        assert "tbs utility 23/80" in lines

    def test_output_file_matches_stdout(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            ["oracle", "--config", INSTANCE, "--output", out_dir], capsys
        )
        assert code == EXIT_OK
        assert (out_dir / "oracle.txt").read_text(encoding="utf-8") == out

    def test_needs_an_instance(self, capsys):
        code, _, err = run_cli(
            ["oracle", "--config", CONFIGS / "region_example.yaml"], capsys
        )
        assert code == EXIT_INVALID
        assert "instance: oracle needs a finite-support instance file" in err


class TestRegionCommand:
    def test_three_user_region_inequalities(self, capsys):
        code, out, _ = run_cli(
            ["region", "--config", CONFIGS / "region_example.yaml"], capsys
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "n 3 nmax 2 inequalities 8"
        assert set(lines[1:]) == {
            "- 1*w1 - 1*w2 - 1*w3 >= -2",
            "- 1*w1 >= -1",
            "- 1*w2 >= -1",
            "- 1*w3 >= -1",
            "1*w1 >= 0",
            "1*w2 >= 0",
            "1*w3 >= 0",
            "1*w1 + 1*w2 + 1*w3 >= 1",
        }

    def test_instance_family_region(self, capsys):
        code, out, _ = run_cli(["region", "--config", INSTANCE], capsys)
        assert code == EXIT_OK
        assert out.startswith("n 2 nmax 2 inequalities ")

    def test_output_file_matches_stdout(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            ["region", "--config", CONFIGS / "region_example.yaml", "--output", out_dir],
            capsys,
        )
        assert code == EXIT_OK
        assert (out_dir / "region.txt").read_text(encoding="utf-8") == out

    def test_resource_cap_maps_to_exit_five(self, capsys, monkeypatch):
        def capped(*args, **kwargs):
            raise ResourceLimitError("region too large: node cap hit")

        monkeypatch.setattr("nomasched.cli.compute_region", capped)
        code, _, err = run_cli(
            ["region", "--config", CONFIGS / "region_example.yaml"], capsys
        )
        assert code == EXIT_RESOURCE
        assert err.startswith("resource limit: region too large")


class TestFeasibilityCommand:
    def test_feasible_reports_witness_and_weights(self, capsys):
        code, out, _ = run_cli(
            ["feasibility", "--config", CONFIGS / "region_example.yaml"], capsys
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "feasible"
        assert lines[1] == "shares 1/2 1/2 1"
        assert "{1,3} 1/2" in lines
        assert "{2,3} 1/2" in lines

    def test_infeasible_is_a_verdict_not_an_error(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {
                "schema": 1,
                "users": 3,
                "nmax": 2,
                "demands": {"lower": ["9/10", "9/10", "9/10"]},
            },
        )
        code, out, _ = run_cli(["feasibility", "--config", cfg], capsys)
        assert code == EXIT_OK
        assert out.startswith("infeasible: violates ")
        assert "w1" in out

    def test_demands_required(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", {"schema": 1, "users": 3})
        code, _, err = run_cli(["feasibility", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "demands: required for a feasibility check" in err

    def test_output_file_matches_stdout(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            ["feasibility", "--config", INSTANCE, "--output", out_dir], capsys
        )
        assert code == EXIT_OK
        assert (out_dir / "feasibility.txt").read_text(encoding="utf-8") == out


class TestSimulateCommand:
    def tbs_wrapper(self, tmp_path, **extra):
        data = {"schema": 1, "instance": str(INSTANCE), "mode": "tbs", "slots": 1000}
        data.update(extra)
        return write_yaml(tmp_path / "tbs.yaml", data)

    def test_instance_run_reports_arm_line(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["simulate", "--config", self.tbs_wrapper(tmp_path)], capsys
        )
        assert code == EXIT_OK
        name, _, utility, _, a1, a2 = out.split()
        assert name == "primary"
        assert 0.25 < float(utility) < 0.31
        assert 0.4 < float(a1) < 0.6 and 0.65 < float(a2) < 0.85

    def test_instance_run_is_deterministic(self, tmp_path, capsys):
        cfg = self.tbs_wrapper(tmp_path)
        first = run_cli(["simulate", "--config", cfg], capsys)
        second = run_cli(["simulate", "--config", cfg], capsys)
        assert first == second

    def test_seed_changes_the_sample_path(self, tmp_path, capsys):
        cfg = self.tbs_wrapper(tmp_path)
        _, out1, _ = run_cli(["simulate", "--config", cfg, "--seed", "1"], capsys)
        _, out2, _ = run_cli(["simulate", "--config", cfg, "--seed", "2"], capsys)
        assert out1 != out2

    def test_channel_benchmarks_and_output_bundle(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml", channel_mapping(benchmarks=["oma", "rr"])
        )
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            ["simulate", "--config", cfg, "--output", out_dir], capsys
        )
        assert code == EXIT_OK
        names = [line.split()[0] for line in out.splitlines()]
        assert names == ["primary", "oma", "rr"]
        expected = {"effective_config.yaml", "summary.csv"}
        for arm in ("primary", "oma", "rr"):
            expected |= {f"{arm}_trace.csv", f"{arm}_ecdf.csv"}
        assert expected <= {p.name for p in out_dir.iterdir()}

    def test_wrr_pattern_labels(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            channel_mapping(
                mode="wrr", slots=999, wrr_pattern=["{1}", "{2}", "{1,2}"]
            ),
        )
        code, out, _ = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_OK
        assert "shares 0.666667 0.666667" in out

    def test_wrr_unknown_label(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml", channel_mapping(mode="wrr", wrr_pattern=["{9}"])
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "wrr_pattern[0]: no virtual user '{9}'" in err

    def test_wrr_needs_pattern_or_equality_demands(self, tmp_path, capsys):
        cfg = self.tbs_wrapper(tmp_path, mode="wrr")
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "wrr_pattern: required unless the demands are equalities" in err

    def test_rm_equality_requires_equality_demands(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(mode="rm-equality"))
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "equality demands" in err

    def test_unresolved_tie_exits_six(self, tmp_path, capsys):
        (tmp_path / "tie.txt").write_text(TIE_INSTANCE, encoding="utf-8")
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": "tie.txt", "mode": "tbs", "slots": 100},
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_TIE
        assert err.startswith("unresolved tie:")

    def test_infeasible_demands_exit_four(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {
                "schema": 1,
                "users": 3,
                "nmax": 2,
                "slots": 100,
                "demands": {"lower": ["9/10", "9/10", "9/10"]},
            },
        )
        code, _, err = run_cli(["simulate", "--config", cfg], capsys)
        assert code == EXIT_INFEASIBLE
        assert err.startswith("infeasible demands:")
        assert "w1" in err


class TestAdaptCommand:
    def test_reports_limit_point_and_slackness(self, capsys):
        code, out, _ = run_cli(
            [
                "adapt",
                "--config",
                CONFIGS / "perturb_two_user.yaml",
                "--slots",
                "20000",
            ],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "mode algorithm2 slots 20000 seed 0"
        prefixes = ("thresholds ", "shares ", "utility ", "residual ", "converged ")
        for prefix, line in zip(prefixes, lines[1:]):
            assert line.startswith(prefix)
        assert lines[6].startswith("user 1: ")
        assert lines[7].startswith("user 2: ")

    def test_history_csv(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, _, _ = run_cli(
            [
                "adapt",
                "--config",
                CONFIGS / "perturb_two_user.yaml",
                "--slots",
                "20000",
                "--output",
                out_dir,
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert (out_dir / "effective_config.yaml").exists()
        with open(out_dir / "adapt_history.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["t", "lambda_1", "lambda_2", "A_1", "A_2", "U_t"]

    def test_matches_simulate_primary_arm(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping())
        _, sim_out, _ = run_cli(["simulate", "--config", cfg], capsys)
        _, adapt_out, _ = run_cli(["adapt", "--config", cfg], capsys)
        sim_words = sim_out.split()
        shares = adapt_out.splitlines()[2]
        assert shares == f"shares {sim_words[4]} {sim_words[5]}"
        assert f"utility {sim_words[2]}" in adapt_out.splitlines()

    def test_rejects_non_adaptation_mode(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", channel_mapping(mode="rr"))
        code, _, err = run_cli(["adapt", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "mode: 'rr' is not an adaptation mode" in err


class TestPerturbSweepCommand:
    def test_sweeps_default_scales(self, capsys):
        code, out, _ = run_cli(
            [
                "perturb-sweep",
                "--config",
                CONFIGS / "perturb_two_user.yaml",
                "--slots",
                "4000",
            ],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "l slots utility residual converged"
        rows = [line.split() for line in lines[1:]]
        assert [int(r[0]) for r in rows] == [1, 2, 4, 8, 16]
        assert all(r[1] == "4000" for r in rows)

    def test_single_scale_flag(self, capsys):
        code, out, _ = run_cli(
            [
                "perturb-sweep",
                "--config",
                CONFIGS / "perturb_two_user.yaml",
                "--slots",
                "4000",
                "--perturb-l",
                "4",
            ],
            capsys,
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("4 4000 ")

    def test_parallel_jobs_match_serial(self, capsys):
        argv = [
            "perturb-sweep",
            "--config",
            CONFIGS / "perturb_two_user.yaml",
            "--slots",
            "3000",
        ]
        _, serial, _ = run_cli(argv + ["--jobs", "1"], capsys)
        _, parallel, _ = run_cli(argv + ["--jobs", "2"], capsys)
        assert serial == parallel

    def test_rejects_other_modes(self, tmp_path, capsys):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            {"schema": 1, "instance": str(INSTANCE), "mode": "tbs"},
        )
        code, _, err = run_cli(["perturb-sweep", "--config", cfg], capsys)
        assert code == EXIT_INVALID
        assert "mode: perturb-sweep always runs algorithm2" in err

    def test_default_slot_count_when_unset(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr("nomasched.cli.SWEEP_DEFAULT_SLOTS", 2000)
        cfg = write_yaml(
            tmp_path / "c.yaml", {"schema": 1, "instance": str(INSTANCE)}
        )
        code, out, _ = run_cli(["perturb-sweep", "--config", cfg], capsys)
        assert code == EXIT_OK
        rows = [line.split() for line in out.splitlines()[1:]]
        assert all(r[1] == "2000" for r in rows)

    def test_sweep_csv(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, _, _ = run_cli(
            [
                "perturb-sweep",
                "--config",
                CONFIGS / "perturb_two_user.yaml",
                "--slots",
                "3000",
                "--output",
                out_dir,
            ],
            capsys,
        )
        assert code == EXIT_OK
        with open(out_dir / "sweep.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["l", "slots", "utility", "residual", "converged"]
        assert [r[0] for r in rows[1:]] == ["1", "2", "4", "8", "16"]


class TestEffectiveConfig:
    def test_channel_round_trip(self, tmp_path):
        cfg = write_yaml(
            tmp_path / "c.yaml",
            channel_mapping(
                mode="wrr",
                wrr_pattern=["{1}", "{2}", "{1,2}"],
                channel={"shadowing_sigma_db": 4.0, "fading": False},
                rate_model="shannon",
                shadowing_per_slot=True,
            ),
        )
        config, _, _ = build_scenario(load_config(str(cfg)), {})
        dumped = write_yaml(tmp_path / "dump.yaml", scenario_to_mapping(config))
        rebuilt, _, _ = build_scenario(load_config(str(dumped)), {})
        assert rebuilt == config

    def test_instance_round_trip_preserves_binding(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, _, _ = run_cli(
            [
                "simulate",
                "--config",
                INSTANCE,
                "--slots",
                "1000",
                "--output",
                out_dir,
            ],
            capsys,
        )
        assert code == EXIT_OK
        loaded = load_config(str(out_dir / "effective_config.yaml"))
        assert loaded.instance is not None
        config, _, instance = build_scenario(loaded, {})
        assert instance is not None
        assert config.users == 2 and config.slots == 1000
        assert config.demands.lower == (F(1, 2), F(1, 4))
        assert config.thresholds == (F(1, 10), F(0))
        original, _, _ = build_scenario(load_config(str(INSTANCE)), {"slots": 1000})
        assert config == original

    def test_defaults_config_builds_wide_area_scenario(self, capsys):
        loaded = load_config(str(CONFIGS / "defaults.yaml"))
        config, _, _ = build_scenario(loaded, {"users": 5})
        assert config.users == 5
        assert config.slots == 5_000_000
        assert config.mode == "algorithm2"
        assert config.step_size == pytest.approx(0.001)
        assert config.channel.bandwidth_hz == pytest.approx(10e6)
        assert config.channel.outer_radius_m == pytest.approx(100.0)


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "nomasched", "oracle", "--config", str(INSTANCE)],
            capture_output=True,
            text=True,
            cwd=REPO,
        )
        assert proc.returncode == EXIT_OK
        assert proc.stdout.splitlines()[0] == "utility 9/32"

    def test_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "nomasched"],
            capture_output=True,
            text=True,
            cwd=REPO,
        )
        assert proc.returncode == EXIT_USAGE
        assert "usage" in proc.stderr
