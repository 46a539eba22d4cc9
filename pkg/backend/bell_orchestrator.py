"""
Bell Orchestrator - coordinates catalog, LHV engine, quantum engine and optimizer
Shared by the CLI and the HTTP service
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from config import VERSION, OptimizationConfig, settings
from models.errors import DimensionMismatchError, ParameterRangeError
from models.inequality import PAIRS, SETTING_TRIPLES, BellInequality, CorrelationInequality
from models.quantum import NoiseParameter, PhaseSettings, PureState
from models.reports import (
    BoundReport,
    CatalogEntry,
    CheckResult,
    ProbeReport,
    SweepSeries,
    Ghz4TableReport,
    TableComparisonRow,
    ThresholdReport,
    TightnessReport,
    ViolationReport,
)
from services.cache_service import ResultCache
from services.catalog import Inequality, catalog, catalog_names, list_catalog
from services.inequality_core import evaluate_lhs, prob_corr_equivalence, restrict_with_constant
from services.local_polytope import (
    classical_max,
    classical_max_correlation,
    correlation_maximizer,
    facet_check,
    write_certificate,
)
from services.optimizer import (
    best_reference_beta1,
    default_grid,
    maximize_violation_phases,
    maximize_violation_qubit,
    reference_settings_d4,
    reference_settings_d5,
    sweep,
    sweep_w_family,
    threshold,
    violates_all_entangled_probe,
)
from services.quantum_engine import ghz_state, mix_white_noise, product_state, quantum_table, w_state
from services.serialization import dump_inequality, format_real

logger = logging.getLogger(__name__)

GHZ4_TABLE_TOLERANCE = 1e-6
CHECK_TOLERANCE = 1e-10

# GHZ_4 at the optimal d = 4 multiport settings
REFERENCE_TABLE_D4: Dict[tuple, Sequence[str]] = {
    (1, 1, 1): ("0", "1/6", "2/3", "1/6"),
    (1, 1, 2): ("1/2", "0", "1/2", "0"),
    (1, 2, 1): ("1/2", "0", "1/2", "0"),
    (2, 1, 1): ("1/2", "0", "1/2", "0"),
    (1, 2, 2): ("2/3", "1/6", "0", "1/6"),
    (2, 1, 2): ("2/3", "1/6", "0", "1/6"),
    (2, 2, 1): ("2/3", "1/6", "0", "1/6"),
    (2, 2, 2): ("1/18", "0", "1/18", "8/9"),
}

# (probability form, correlation form, scale, offset)
EQUIVALENCE_CHECKS = (
    ("quartit-qubit", "corr-quartit-qubit", 2.0, 6.0),
    ("quintit-qubit", "mermin-corr-alt", 1.25, 1.5),
    ("mermin-prob", "mermin-corr", 1.0, 0.0),
)


def _is_chsh_family(cineq: CorrelationInequality) -> bool:
    """Equal-magnitude AB correlators with an odd number of minus signs and bound 2m"""
    ab = cineq.pairs[PAIRS.index("AB")]
    others = np.concatenate([cineq.triple.ravel(), cineq.pairs[1:].ravel(), cineq.singles.ravel()])
    magnitude = abs(ab[0, 0])
    return bool(
        magnitude > 0
        and np.allclose(np.abs(ab), magnitude, atol=CHECK_TOLERANCE)
        and np.prod(np.sign(ab)) < 0
        and np.allclose(others, 0.0, atol=CHECK_TOLERANCE)
        and abs(cineq.bound - 2 * magnitude) <= CHECK_TOLERANCE
    )


def _corrupted(ineq: BellInequality) -> BellInequality:
    """Copy with one coefficient changed, used as a negative control"""
    numerators = ineq.numerators.copy()
    numerators[0, 0, 0, 0] += ineq.denominator
    return BellInequality(
        d=ineq.d,
        numerators=numerators,
        bound_numerator=ineq.bound_numerator,
        label=f"{ineq.label}-corrupted",
        denominator=ineq.denominator,
        outcomes=ineq.outcomes,
    )


class BellOrchestrator:
    """
    Entry point for every user-facing operation
    Exact LHV results are memoized in a ResultCache keyed by the inequality text
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.THREADS
        self.cache: Optional[ResultCache] = None

    async def initialize(self):
        logger.info(f"Initializing Bell orchestrator v{VERSION} (threads={self.threads})")
        if settings.ENABLE_RESULT_CACHE:
            self.cache = ResultCache(
                ttl_seconds=settings.CACHE_TTL_SECONDS,
                max_size=settings.CACHE_MAX_SIZE,
            )
            logger.info("Result cache enabled")

    async def cleanup(self):
        logger.info("Cleaning up resources...")
        if self.cache:
            self.cache.clear()

    async def check_health(self) -> dict:
        return {
            "healthy": True,
            "version": VERSION,
            "catalog_size": len(catalog_names(include_trivial=False)),
            "threads": self.threads,
            "cache": self.cache.get_stats() if self.cache else None,
        }

    def _memoize(self, operation: str, ineq: Inequality, compute):
        if self.cache is None:
            return compute()
        return self.cache.memoize(operation, dump_inequality(ineq), compute)

    # Catalog and LHV side

    def list_catalog(self, form: Optional[str] = None, d: Optional[int] = None) -> List[CatalogEntry]:
        if form not in (None, "probability", "correlation"):
            raise ParameterRangeError(f"Form must be probability or correlation, got {form}")
        return list_catalog(form=form, d=d)

    def bound(self, name: str) -> BoundReport:
        """Exact classical maximum of a catalog inequality against its stated bound"""
        ineq = catalog(name)

        def compute() -> BoundReport:
            if isinstance(ineq, BellInequality):
                best = classical_max(ineq, threads=self.threads)
                return BoundReport(
                    name=name,
                    form="probability",
                    classical_max=str(best.value),
                    bound=str(ineq.bound),
                    is_valid=best.value <= ineq.bound,
                    maximizer_count=best.maximizer_count,
                    witness=list(best.witness),
                )
            value = classical_max_correlation(ineq)
            return BoundReport(
                name=name,
                form="correlation",
                classical_max=format_real(value),
                bound=format_real(ineq.bound),
                is_valid=value <= ineq.bound + CHECK_TOLERANCE,
                witness=list(correlation_maximizer(ineq)),
            )

        report = self._memoize("bound", ineq, compute)
        if not report.is_valid:
            logger.warning(f"{name}: classical max {report.classical_max} exceeds bound {report.bound}")
        return report

    def tight(
        self,
        name: str,
        allow_large: bool = False,
        out: Optional[Union[str, Path]] = None
    ) -> TightnessReport:
        """
        Facet certificate of a probability-form catalog inequality

        Args:
            name: catalog identifier
            allow_large: lift the MAX_FACET_D guard
            out: optional certificate file
        """
        ineq = catalog(name)
        if not isinstance(ineq, BellInequality):
            raise ParameterRangeError(f"{name} is a correlation inequality; facet checks need probability form")
        report = self._memoize(
            f"tight:{allow_large}", ineq,
            lambda: facet_check(ineq, allow_large=allow_large, threads=self.threads),
        )
        if out is not None:
            write_certificate(report, ineq, out)
        return report

    # Quantum side

    def _state_for(self, state: str, d: int) -> PureState:
        if state == "ghz":
            return ghz_state(d)
        if state == "product":
            return product_state(d)
        if state == "w":
            if d != 2:
                raise DimensionMismatchError(f"The W state is a three-qubit state; inequality has d={d}")
            return w_state()
        raise ParameterRangeError(f"Unknown state '{state}' (ghz, w or product)")

    @staticmethod
    def reference_settings(d: int) -> PhaseSettings:
        if d == 4:
            return reference_settings_d4()
        if d == 5:
            return reference_settings_d5(best_reference_beta1()[0])
        raise ParameterRangeError(f"No published settings for d={d}; use optimize")

    def violate(
        self,
        name: str,
        state: str = "ghz",
        settings_mode: str = "reference",
        noise: float = 0.0,
        config: Optional[OptimizationConfig] = None
    ) -> ViolationReport:
        """
        Quantum value of a catalog inequality on a named state

        Probability forms are measured with multiport settings and report a
        fidelity threshold; correlation forms are optimized over qubit
        observables and report a visibility threshold.
        """
        if settings_mode not in ("reference", "optimize"):
            raise ParameterRangeError(f"Settings must be reference or optimize, got {settings_mode}")
        F = NoiseParameter(noise).F
        config = config or OptimizationConfig()
        ineq = catalog(name)
        logger.info(f"Violation of {name} on {state} ({settings_mode} settings, noise {F})")

        if isinstance(ineq, CorrelationInequality):
            if settings_mode != "optimize":
                raise ParameterRangeError(f"{name} has no published settings; use optimize")
            optimum = maximize_violation_qubit(ineq, self._state_for(state, 2), config)
            value = optimum.result.value
            bound = ineq.bound
            noisy_value = (1.0 - F) * value
            kind = "visibility"
            converged = optimum.result.converged
            chosen = {key: [float(x) for x in obs.vector] for key, obs in optimum.observables.items()}
        else:
            if ineq.outcomes != ineq.d:
                raise DimensionMismatchError(
                    f"{name} is a three-qubit inequality written mod {ineq.d}; use its correlation form"
                )
            quantum_state = self._state_for(state, ineq.d)
            if settings_mode == "reference":
                phase_settings = self.reference_settings(ineq.d)
                converged = True
            else:
                optimum = maximize_violation_phases(ineq, quantum_state, config)
                phase_settings = optimum.settings
                converged = optimum.result.converged
            table = quantum_table(quantum_state, phase_settings, threads=self.threads)
            value = evaluate_lhs(ineq, table)
            bound = float(ineq.bound)
            noisy_value = evaluate_lhs(ineq, mix_white_noise(table, F)) if F > 0 else value
            kind = "fidelity"
            chosen = phase_settings.as_mapping()

        limit = threshold(value, bound, kind).threshold if value > 0 else None
        return ViolationReport(
            name=name,
            state=state,
            settings_mode=settings_mode,
            value=value,
            bound=bound,
            ratio=value / bound if bound else float("inf"),
            noise=F,
            noisy_value=noisy_value,
            threshold=limit,
            threshold_kind=kind,
            converged=converged,
            settings=chosen,
        )

    def ghz4_table(self) -> Ghz4TableReport:
        """Recompute the GHZ_4 modular table at the d = 4 settings and compare with the reference"""
        table = quantum_table(ghz_state(4), reference_settings_d4(), threads=self.threads)
        rows = []
        for triple in SETTING_TRIPLES:
            for r, reference in enumerate(REFERENCE_TABLE_D4[triple]):
                computed = table.probability(*triple, r)
                rows.append(TableComparisonRow(
                    triple=triple,
                    r=r,
                    computed=computed,
                    reference=reference,
                    delta=computed - float(Fraction(reference)),
                ))
        max_delta = max(abs(row.delta) for row in rows)
        lhs = evaluate_lhs(catalog("quartit"), table)
        logger.info(f"Table comparison: LHS {lhs:.12g}, max |delta| {max_delta:.3e}")
        return Ghz4TableReport(rows=rows, lhs=lhs, max_delta=max_delta, matches=max_delta < GHZ4_TABLE_TOLERANCE)

    def thresholds(self, config: Optional[OptimizationConfig] = None) -> List[ThresholdReport]:
        """Noise thresholds of the headline violations"""
        config = config or OptimizationConfig()
        reports = []

        def add(label: str, value: float, bound: float, kind: str):
            report = threshold(value, bound, kind).model_copy(update={"label": label})
            logger.info(f"{label}: Q={value:.10g} B={bound:.10g} {kind}={report.threshold}")
            reports.append(report)

        quartit = catalog("quartit")
        add("quartit GHZ4 reference settings",
            evaluate_lhs(quartit, quantum_table(ghz_state(4), reference_settings_d4())), 12.0, "fidelity")

        quintit = catalog("quintit")
        add("quintit GHZ5 optimized",
            maximize_violation_phases(quintit, ghz_state(5), config).result.value, 4.0, "fidelity")

        for name, state_name in (
            ("corr-quartit-qubit", "ghz"),
            ("corr-quartit-qubit", "w"),
            ("corr-qutrit-qubit-normalized", "ghz"),
            ("corr-qutrit-qubit-normalized", "w"),
            ("corr-quartit-qubit-normalized", "ghz"),
        ):
            cineq = catalog(name)
            value = maximize_violation_qubit(cineq, self._state_for(state_name, 2), config).result.value
            add(f"{name} {state_name.upper()} optimized", value, cineq.bound, "visibility")

        # regression baseline, no published value
        qutrit = catalog("qutrit")
        add("qutrit GHZ3 optimized",
            maximize_violation_phases(qutrit, ghz_state(3), config).result.value, 6.0, "fidelity")
        return reports

    # Reductions

    def reduce_check(self, self_test: bool = False) -> List[CheckResult]:
        """
        Qubit reduction checks: CHSH from the deterministic restriction of the
        three-qubit correlation inequality, and the affine equivalences between
        probability and correlation forms

        Args:
            self_test: append a corrupted-coefficient negative control, which must fail
        """
        results = []

        restricted = restrict_with_constant(catalog("corr-quartit-qubit"), "C", (-1, 1))
        passed = _is_chsh_family(restricted.inequality)
        results.append(CheckResult(
            name="chsh-restriction",
            passed=passed,
            detail=(
                f"C=(-1,+1): {restricted.inequality.terms()} <= {format_real(restricted.inequality.bound)} "
                f"(constant {format_real(restricted.constant)})"
            ),
            witness=None if passed else dump_inequality(restricted.inequality),
        ))

        pairs = [(catalog(p), catalog(c), scale, offset) for p, c, scale, offset in EQUIVALENCE_CHECKS]
        if self_test:
            pineq, cineq, scale, offset = pairs[0]
            pairs.append((_corrupted(pineq), cineq, scale, offset))

        for pineq, cineq, scale, offset in pairs:
            eq = prob_corr_equivalence(pineq, cineq, seed=settings.DEFAULT_SEED)
            passed = (
                eq.equivalent
                and abs(eq.scale - scale) <= CHECK_TOLERANCE
                and abs(eq.offset - offset) <= CHECK_TOLERANCE
            )
            results.append(CheckResult(
                name=f"{pineq.label}~{cineq.label}",
                passed=passed,
                detail=(
                    f"scale={format_real(eq.scale)} offset={format_real(eq.offset)} "
                    f"(expected {format_real(scale)}, {format_real(offset)}), "
                    f"max discrepancy {eq.max_discrepancy:.3e} over {eq.checked_behaviours} behaviours"
                ),
                witness=eq.witness_description,
            ))

        for result in results:
            if not result.passed:
                logger.warning(f"Check {result.name} failed: {result.detail}")
        return results

    # Sweeps and probe

    def sweep_series(
        self,
        names: Sequence[str],
        family: str = "ghz",
        betas: Sequence[float] = (),
        grid_points: Optional[int] = None,
        config: Optional[OptimizationConfig] = None
    ) -> List[SweepSeries]:
        """
        Sweep several inequalities over one family on a shared grid

        The W family takes one curve per (name, beta) pair; the GHZ family
        takes no beta.
        """
        if not names:
            raise ParameterRangeError("Sweep needs at least one inequality")
        if grid_points is not None and grid_points < 1:
            raise ParameterRangeError(f"Grid needs at least one point, got {grid_points}")
        if family == "ghz" and betas:
            raise ParameterRangeError("The GHZ family takes no beta")
        if family == "w" and not betas:
            raise ParameterRangeError("The W family needs at least one beta")
        config = config or OptimizationConfig()
        grid = default_grid(grid_points)

        series = []
        for name in names:
            inequality = catalog(name)
            if family == "w":
                for beta, rows in sweep_w_family(inequality, betas, grid, config).items():
                    series.append(SweepSeries(
                        label=f"{name} (beta={beta:g})", name=name, family=family, beta=beta, rows=rows
                    ))
            else:
                series.append(SweepSeries(
                    label=name, name=name, family=family, rows=sweep(family, inequality, grid, config)
                ))
        return series

    def probe(
        self,
        sample_count: int,
        seed: int,
        config: Optional[OptimizationConfig] = None,
        name: str = "corr-quartit-qubit"
    ) -> ProbeReport:
        cineq = catalog(name)
        if not isinstance(cineq, CorrelationInequality):
            raise ParameterRangeError(f"The probe needs a correlation inequality, got {name}")
        return violates_all_entangled_probe(sample_count, seed, config, cineq)
