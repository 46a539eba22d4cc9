import asyncio
import math

import pytest

from models.errors import CatalogError, DimensionMismatchError, ParameterRangeError, ResourceGuardError


class TestLifecycle:
    def test_health(self, orchestrator):
        health = asyncio.run(orchestrator.check_health())
        assert health["healthy"]
        assert health["threads"] == 1
        assert health["cache"]["entries"] == 0

    def test_unknown_form(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.list_catalog(form="matrix")


class TestLhv:
    def test_correlation_bound(self, orchestrator):
        report = orchestrator.bound("corr-quartit-qubit")
        assert report.form == "correlation"
        assert report.classical_max == "3"
        assert report.is_valid
        assert len(report.witness) == 6

    def test_unknown_name(self, orchestrator):
        with pytest.raises(CatalogError):
            orchestrator.bound("quartet")

    def test_tight_rejects_correlation_form(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.tight("mermin-corr")

    def test_tight_guard(self, orchestrator):
        with pytest.raises(ResourceGuardError):
            orchestrator.tight("trivial-d6")


class TestViolate:
    def test_reference_settings_only_for_four_and_five(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.violate("qutrit")

    def test_quintit_reference_settings(self, orchestrator):
        report = orchestrator.violate("quintit")
        assert report.value == pytest.approx(6.72216, abs=1e-3)
        assert report.threshold == pytest.approx(0.40495, abs=1e-4)

    def test_product_state_does_not_violate(self, orchestrator):
        report = orchestrator.violate("quartit", state="product")
        assert report.value <= 12 + 1e-9
        assert report.threshold is None

    def test_qubit_form_needs_correlation_inequality(self, orchestrator):
        with pytest.raises(DimensionMismatchError):
            orchestrator.violate("quartit-qubit", settings_mode="optimize")

    def test_correlation_form_needs_optimize(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.violate("mermin-corr")

    def test_correlation_visibility(self, orchestrator, quick_config):
        report = orchestrator.violate("mermin-corr", settings_mode="optimize", noise=0.25, config=quick_config)
        assert report.value == pytest.approx(4.0, abs=1e-6)
        assert report.noisy_value == pytest.approx(3.0, abs=1e-6)
        assert report.threshold_kind == "visibility"
        assert report.threshold == pytest.approx(0.5, abs=1e-6)
        assert set(report.settings) == {"A1", "A2", "B1", "B2", "C1", "C2"}


class TestTables:
    def test_ghz4_table_matches(self, orchestrator):
        report = orchestrator.ghz4_table()
        assert report.matches
        assert report.max_delta < 1e-9
        assert report.lhs == pytest.approx(68 / 3, abs=1e-9)

    @pytest.mark.slow
    def test_thresholds(self, orchestrator):
        reports = {r.label: r for r in orchestrator.thresholds()}
        assert reports["quartit GHZ4 reference settings"].threshold == pytest.approx(8 / 17, abs=1e-9)
        assert reports["quintit GHZ5 optimized"].threshold == pytest.approx(0.40495, abs=1e-4)
        assert reports["corr-quartit-qubit GHZ optimized"].threshold == pytest.approx(0.68125, abs=1e-4)
        assert reports["corr-quartit-qubit W optimized"].threshold == pytest.approx(0.660668, abs=1e-4)
        assert reports["corr-qutrit-qubit-normalized GHZ optimized"].threshold == pytest.approx(
            4 * math.sqrt(3) / 9, abs=1e-4
        )
        assert reports["corr-qutrit-qubit-normalized W optimized"].threshold == pytest.approx(0.7312, abs=1e-3)
        assert reports["corr-quartit-qubit-normalized GHZ optimized"].threshold == pytest.approx(0.68125, abs=1e-4)
        assert "qutrit GHZ3 optimized" in reports
        assert len(reports) == 8


class TestReductions:
    def test_all_checks_pass(self, orchestrator):
        results = orchestrator.reduce_check()
        assert [r.name for r in results] == [
            "chsh-restriction",
            "quartit-qubit~corr-quartit-qubit",
            "quintit-qubit~mermin-corr-alt",
            "mermin-prob~mermin-corr",
        ]
        assert all(r.passed for r in results)

    def test_corrupted_control_fails(self, orchestrator):
        results = orchestrator.reduce_check(self_test=True)
        assert not results[-1].passed
        assert results[-1].witness
        assert all(r.passed for r in results[:-1])


class TestSweepAndProbe:
    def test_sweep_grid(self, orchestrator, quick_config):
        (series,) = orchestrator.sweep_series(["mermin-corr"], grid_points=3, config=quick_config)
        assert series.label == "mermin-corr"
        assert [r.xi for r in series.rows] == pytest.approx([0.0, 0.7853981633974483, 1.5707963267948966])
        assert {r.inequality for r in series.rows} == {"mermin-corr"}

    def test_sweep_grid_must_be_positive(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.sweep_series(["mermin-corr"], grid_points=0)

    def test_w_family_series_per_beta(self, orchestrator, quick_config):
        series = orchestrator.sweep_series(
            ["mermin-corr", "corr-quartit-qubit"], family="w", betas=[0.5, 1.0], grid_points=2, config=quick_config
        )
        assert [s.label for s in series] == [
            "mermin-corr (beta=0.5)",
            "mermin-corr (beta=1)",
            "corr-quartit-qubit (beta=0.5)",
            "corr-quartit-qubit (beta=1)",
        ]
        assert all(row.beta == s.beta for s in series for row in s.rows)

    @pytest.mark.parametrize("family,betas", [("ghz", [0.5]), ("w", [])])
    def test_beta_must_match_family(self, orchestrator, family, betas):
        with pytest.raises(ParameterRangeError):
            orchestrator.sweep_series(["mermin-corr"], family=family, betas=betas, grid_points=2)

    def test_needs_a_name(self, orchestrator):
        with pytest.raises(ParameterRangeError):
            orchestrator.sweep_series([])

    def test_unknown_name(self, orchestrator):
        with pytest.raises(CatalogError):
            orchestrator.sweep_series(["mermin-corr", "quartet"], grid_points=2)

    def test_probe(self, orchestrator, quick_config):
        report = orchestrator.probe(2, 9, quick_config)
        assert report.sample_count == 2
        assert report.seed == 9
