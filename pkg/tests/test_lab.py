import json

import pytest

from bxoslab import sample_instance
from bxoslab.cli import main as cli_main
from bxoslab.construction import ConstructionError, reference_instance
from bxoslab.lab import (
    ConfigError,
    ExperimentConfig,
    canonical_report_bytes,
    dump_instance,
    instance_from_json,
    instance_to_json,
    load_instance,
    run_protocol_experiment,
    verify_concentration,
    verify_info,
    verify_nu_equivalence,
    verify_theta_recovery,
)
from bxoslab.stats import independence_chi2, two_sample_chi2, uniform_chi2


class TestConfig:
    def test_validates_fields(self):
        ExperimentConfig(m=160, n=4, eps=0.002, trials=2, seed=1).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(m=100).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(m=160, eps=0.3).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(m=160, trials=0).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(m=160, variant="mu").validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(m=160, protocol="nope").validate()


class TestSerialization:
    def test_roundtrip_identity(self, rng):
        inst = sample_instance(160, 4, "nu", rng)
        assert instance_from_json(instance_to_json(inst)) == inst

    def test_roundtrip_bytes_identical(self, tmp_path, rng):
        inst = sample_instance(32, 3, "nu_prime", rng)
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        dump_instance(inst, p1)
        dump_instance(load_instance(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_i_star_is_one_based_on_disk(self, rng):
        inst = sample_instance(16, 4, "nu", rng)
        data = instance_to_json(inst)
        assert data["i_star"] == inst.i_star + 1
        assert set(data) == {
            "m", "n", "variant", "theta", "i_star", "S", "T",
            "A1", "A2", "B1", "B2", "rA", "rB", "seed",
        }

    def test_corrupted_theta_rejected(self, rng):
        inst = sample_instance(16, 4, "nu", rng)
        data = instance_to_json(inst)
        data["theta"] = 3 - data["theta"]
        with pytest.raises(ConstructionError):
            instance_from_json(data)

    def test_corrupted_clause_rejected(self, rng):
        inst = sample_instance(16, 4, "nu", rng)
        data = instance_to_json(inst)
        data["A1"][0] = "ffff"
        with pytest.raises(ConstructionError):
            instance_from_json(data)

    def test_malformed_payload_rejected(self):
        with pytest.raises(ConstructionError):
            instance_from_json({"m": 16})

    def test_reference_instance_roundtrip(self):
        inst = reference_instance()
        again = instance_from_json(instance_to_json(inst))
        assert again == inst


class TestChiSquareHelpers:
    def test_identical_samples_give_zero_statistic(self):
        values = [1, 2, 2, 3, 3, 3] * 20
        stat, df, p = two_sample_chi2(values, list(values))
        assert stat == 0.0
        assert p == 1.0

    def test_uniform_counts_give_zero_statistic(self):
        stat, _, p = uniform_chi2([25, 25, 25, 25])
        assert stat == 0.0 and p == 1.0

    def test_skewed_counts_reject(self):
        _, _, p = uniform_chi2([100, 0, 0, 0])
        assert p < 1e-6

    def test_independent_table_accepts(self):
        table = [[50, 50], [50, 50]]
        _, _, p = independence_chi2(table)
        assert p == 1.0

    def test_dependent_table_rejects(self):
        table = [[100, 0], [0, 100]]
        _, _, p = independence_chi2(table)
        assert p < 1e-6

    def test_degenerate_tables_are_neutral(self):
        assert two_sample_chi2([], []) == (0.0, 0, 1.0)
        assert uniform_chi2([5]) == (0.0, 0, 1.0)
        assert independence_chi2([[3, 0], [1, 0]])[2] == 1.0


class TestDrivers:
    def test_concentration_report_structure(self):
        cfg = ExperimentConfig(m=160, n=3, eps=0.05, trials=5, seed=7)
        report = verify_concentration(cfg)
        names = [c["name"] for c in report["checks"]]
        assert names == ["exact_expected_intersections", "cross_intersection_floors"]
        from fractions import Fraction

        exact = report["checks"][0]
        assert exact["status"] == "pass"
        golden = Fraction(51 * 160, 200)
        assert exact["measured"]["golden_regular"] == f"{golden.numerator}/{golden.denominator}"
        assert exact["measured"]["regular_11"] == exact["measured"]["golden_regular"]

    def test_concentration_single_index_is_informational(self):
        cfg = ExperimentConfig(m=160, n=1, eps=0.05, trials=2, seed=7)
        report = verify_concentration(cfg)
        assert report["checks"][1]["status"] == "info"

    def test_theta_recovery_small(self):
        cfg = ExperimentConfig(m=160, n=4, eps=0.002, trials=3, seed=8)
        report = verify_theta_recovery(cfg)
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["optimum_is_full_universe"]["status"] == "pass"
        assert by_name["theta_recovered_from_optimal_allocation"]["measured"]["recovered"] == 3

    def test_theta_recovery_reports_exhaustive_counts_at_m16(self):
        cfg = ExperimentConfig(m=16, n=3, eps=0.002, trials=2, seed=9)
        report = verify_theta_recovery(cfg)
        by_name = {c["name"]: c for c in report["checks"]}
        info = by_name["exhaustive_splits_clearing_both_bars"]
        assert info["status"] == "info"
        assert info["measured"]["splits_total"] == 1 << 16
        assert len(info["measured"]["counts"]) == 2

    def test_nu_equivalence_needs_two_indices(self):
        with pytest.raises(ConfigError):
            verify_nu_equivalence(ExperimentConfig(m=160, n=1, trials=5, seed=3))

    def test_info_driver_passes(self):
        report = verify_info(ExperimentConfig(m=16, trials=25, seed=4))
        assert report["passed"]

    def test_protocol_driver_requires_name(self):
        with pytest.raises(ConfigError):
            run_protocol_experiment(ExperimentConfig(m=160, trials=1, seed=1))

    def test_protocol_driver_trivial(self):
        cfg = ExperimentConfig(m=160, n=3, trials=4, seed=11, protocol="trivial")
        report = run_protocol_experiment(cfg)
        measured = report["checks"][0]["measured"]
        assert measured["ratio_min"] == measured["ratio_max"] == "1/2"
        assert measured["exceedance_probability"] == 0.0

    def test_reports_are_deterministic(self):
        cfg = ExperimentConfig(m=160, n=3, eps=0.05, trials=4, seed=21)
        a = canonical_report_bytes(verify_concentration(cfg))
        b = canonical_report_bytes(verify_concentration(cfg))
        assert a == b
        cfg2 = ExperimentConfig(m=160, n=3, eps=0.05, trials=4, seed=22)
        assert canonical_report_bytes(verify_concentration(cfg2)) != a


class TestCli:
    def test_gen_and_opt(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        assert cli_main(["gen", "--m", "160", "--n", "4", "--seed", "5", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["m"] == 160
        assert cli_main(["opt", "--instance", str(out)]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed["opt"] == 160

    def test_opt_bruteforce_flag(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        cli_main(["gen", "--m", "16", "--n", "3", "--seed", "6", "--out", str(out)])
        assert cli_main(["opt", "--instance", str(out), "--bruteforce"]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed["opt_bruteforce"] == printed["opt"] == 16

    def test_verify_info_exit_code(self, tmp_path):
        out = tmp_path / "report.json"
        code = cli_main(["verify", "info", "--trials", "20", "--seed", "3", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["passed"]

    def test_run_protocol(self, tmp_path):
        out = tmp_path / "report.json"
        code = cli_main(
            ["run", "--protocol", "basis-exchange", "--m", "160", "--n", "3",
             "--trials", "2", "--seed", "5", "--out", str(out)]
        )
        assert code == 0
        measured = json.loads(out.read_text())["checks"][0]["measured"]
        assert measured["ratio_min"] == "1"
        assert measured["rounds"] == [2]

    def test_bad_config_is_usage_error(self, capsys):
        assert cli_main(["verify", "concentration", "--m", "100"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_verify_nu_equivalence_smoke(self, tmp_path):
        out = tmp_path / "report.json"
        code = cli_main(
            ["verify", "nu-equivalence", "--m", "160", "--n", "4",
             "--trials", "300", "--seed", "13", "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["checks"][0]["thresholds"]["significance"] == 0.001

    def test_run_protocol_on_clause_first_variant(self, tmp_path):
        out = tmp_path / "report.json"
        code = cli_main(
            ["run", "--protocol", "trivial", "--m", "160", "--n", "3",
             "--trials", "3", "--seed", "5", "--variant", "nu_prime", "--out", str(out)]
        )
        assert code == 0
        measured = json.loads(out.read_text())["checks"][0]["measured"]
        assert measured["ratio_min"] == "1/2"

    def test_env_seed_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BXOSLAB_SEED", "99")
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        cli_main(["gen", "--m", "16", "--n", "2", "--out", str(out1)])
        cli_main(["gen", "--m", "16", "--n", "2", "--seed", "99", "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_instance_file(self, capsys):
        assert cli_main(["opt", "--instance", "/nonexistent.json"]) == 2
