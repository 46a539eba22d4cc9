"""
Optimizer Service - maximal quantum violations, thresholds and parameter sweeps

Multi-start Nelder-Mead (scipy) with restarts from the incumbent point.
Phase vectors are gauge fixed (phi^0 = 0 for every party and setting).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from config import OptimizationConfig, settings
from models.errors import DimensionMismatchError, InconsistencyError, ParameterRangeError
from models.inequality import PARTIES, BellInequality, CorrelationInequality
from models.quantum import PhaseSettings, PureState, QubitObservable
from models.reports import MaximizationResult, ProbeReport, ProbeSample, SweepRow, ThresholdReport
from services.catalog import catalog
from services.inequality_core import evaluate_correlation, evaluate_lhs
from services.local_polytope import correlation_maximizer
from services.quantum_engine import (
    canonical_state,
    entanglement_check,
    expectations_from_tensor,
    generalized_ghz,
    generalized_w,
    ghz_closed_form_table,
    pauli_tensor,
    random_pure_state,
)

logger = logging.getLogger(__name__)

PROBE_STEP = 1e-5
PROBE_GAIN = 1e-7
CAP_SLACK = 1e-9
MAX_SIMPLEX_REFRESHES = 25
D5_BETA1_MAX = 2 * np.pi / 9  # cos(3 beta1) >= -1/2

Objective = Callable[[np.ndarray], float]


class PhaseOptimum(NamedTuple):
    result: MaximizationResult
    settings: PhaseSettings


class QubitOptimum(NamedTuple):
    result: MaximizationResult
    observables: Dict[str, QubitObservable]


# Reference settings

def reference_settings_d4() -> PhaseSettings:
    """Symmetric d = 4 multiport settings giving LHS 68/3 on GHZ_4"""
    t1 = np.arccos(-1.0 / 3.0) / 3.0
    t2 = np.arcsin(7.0 / 9.0) / 3.0
    first = [0.0, t1, t1 - np.pi / 3, np.pi / 3]
    second = [0.0, t2, t2 + np.pi / 6, -np.pi / 6]
    return PhaseSettings.symmetric(first, second)


def d5_beta2(beta1: float) -> float:
    """beta2 on the curve cos(3 beta1) - cos(3 beta2) = 1/2"""
    arg = np.cos(3 * beta1) - 0.5
    if not -1.0 <= arg <= 1.0:
        raise ParameterRangeError(f"No beta2 solves the constraint for beta1={beta1}")
    return float(np.arccos(arg) / 3.0)


def reference_settings_d5(beta1: float) -> PhaseSettings:
    beta2 = d5_beta2(beta1)
    first = [0.0, beta1, beta2, -beta2, -beta1]
    second = [
        0.0,
        beta1 + np.pi / 5,
        beta2 + 2 * np.pi / 5,
        -beta2 - 2 * np.pi / 5,
        -beta1 - np.pi / 5,
    ]
    return PhaseSettings.symmetric(first, second)


def d5_curve_value(beta1: float) -> float:
    """quintit LHS on GHZ_5 at the constrained settings"""
    return evaluate_lhs(catalog("quintit"), ghz_closed_form_table(5, reference_settings_d5(beta1)))


def scan_d5_curve(n: int = 20) -> List[Tuple[float, float]]:
    """(beta1, value) at n admissible points of the constraint curve"""
    if n < 1:
        raise ParameterRangeError("Scan needs at least one point")
    betas = np.linspace(0.0, D5_BETA1_MAX, n + 2)[1:-1]
    return [(float(b), d5_curve_value(b)) for b in betas]


@lru_cache(maxsize=1)
def best_reference_beta1(grid_points: int = 181) -> Tuple[float, float]:
    """
    beta1 maximizing the quintit value along the constraint curve

    Returns:
        (beta1, value); grid scan followed by a bounded scalar search
    """
    betas = np.linspace(0.0, D5_BETA1_MAX, grid_points)
    values = np.array([d5_curve_value(b) for b in betas])
    i = int(np.argmax(values))
    lo = betas[max(i - 1, 0)]
    hi = betas[min(i + 1, grid_points - 1)]
    res = minimize_scalar(
        lambda b: -d5_curve_value(b), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    beta1, value = float(res.x), float(-res.fun)
    if values[i] > value:
        beta1, value = float(betas[i]), float(values[i])
    logger.info(f"Best beta1 on the d=5 curve: {beta1:.10f} -> {value:.8f}")
    return beta1, value


def _reference_seed(d: int) -> Optional[PhaseSettings]:
    if d == 4:
        return reference_settings_d4()
    if d == 5:
        return reference_settings_d5(best_reference_beta1()[0])
    return None


# Parameter maps

def settings_from_params(params: np.ndarray, d: int, symmetric: bool) -> PhaseSettings:
    free = np.asarray(params, dtype=float).reshape(-1, d - 1)
    vectors = np.hstack([np.zeros((len(free), 1)), free])
    if symmetric:
        return PhaseSettings(phases=np.stack([vectors] * 3))
    return PhaseSettings(phases=vectors.reshape(3, 2, d))


def params_from_settings(phase_settings: PhaseSettings, symmetric: bool) -> np.ndarray:
    gauged = phase_settings.phases - phase_settings.phases[..., :1]
    if symmetric:
        return gauged[0, :, 1:].ravel()
    return gauged[:, :, 1:].ravel()


def observables_from_angles(angles: np.ndarray) -> np.ndarray:
    """(theta, phi) pairs for A1, A2, B1, B2, C1, C2 -> (3, 2, 3) Bloch vectors"""
    theta, phi = np.asarray(angles, dtype=float).reshape(6, 2).T
    vectors = np.stack([
        np.sin(theta) * np.cos(phi),
        np.sin(theta) * np.sin(phi),
        np.cos(theta),
    ], axis=1)
    return vectors.reshape(3, 2, 3)


def _observable_mapping(angles: np.ndarray) -> Dict[str, QubitObservable]:
    theta, phi = np.asarray(angles, dtype=float).reshape(6, 2).T
    names = [f"{p}{s}" for p in PARTIES for s in (1, 2)]
    return {n: QubitObservable.from_angles(t, f) for n, t, f in zip(names, theta, phi)}


# Objectives

def phase_objective(ineq: BellInequality, state: PureState, symmetric: bool) -> Objective:
    """LHS as a function of gauge-fixed phases, all eight triples in one contraction"""
    if ineq.d != state.d:
        raise DimensionMismatchError(f"Inequality has d={ineq.d} but state has d={state.d}")
    d = state.d
    k = np.arange(d)
    dft = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    residues = ((k[:, None, None] + k[None, :, None] + k[None, None, :]) % d).ravel()
    one_hot = (residues[:, None] == k[None, :]).astype(float)
    weights = ineq.values
    psi = state.amplitudes
    u0 = np.zeros((2, d, d), dtype=complex)
    path = np.einsum_path("iax,jby,kcz,xyz->ijkabc", u0, u0, u0, psi, optimize="optimal")[0]

    def value(params: np.ndarray) -> float:
        phases = settings_from_params(params, d, symmetric).phases
        u = dft[None, None] * np.exp(1j * phases)[:, :, None, :]
        rotated = np.einsum("iax,jby,kcz,xyz->ijkabc", u[0], u[1], u[2], psi, optimize=path)
        table = (np.abs(rotated) ** 2).reshape(2, 2, 2, -1) @ one_hot
        return float(np.sum(weights * table))

    return value


def qubit_objective(cineq: CorrelationInequality, state: PureState) -> Objective:
    tensor = pauli_tensor(state)

    def value(angles: np.ndarray) -> float:
        return evaluate_correlation(cineq, expectations_from_tensor(tensor, observables_from_angles(angles)))

    return value


def phase_cap(ineq: BellInequality) -> float:
    """sum over triples of the largest coefficient"""
    return float(ineq.values.max(axis=-1).sum())


def correlation_cap(cineq: CorrelationInequality) -> float:
    return float(np.abs(cineq.as_vector()).sum())


# Multi-start search

class _Descent(NamedTuple):
    index: int
    x: np.ndarray
    value: float
    evaluations: int
    converged: bool


def _descend(objective: Objective, index: int, x0: np.ndarray, config: OptimizationConfig) -> _Descent:
    def negated(x):
        return -objective(x)

    options = {
        "maxiter": config.max_iterations,
        "maxfev": 4 * config.max_iterations,
        "xatol": 1e-10,
        "fatol": config.tolerance,
        "adaptive": len(x0) > 4,
    }
    res = minimize(negated, x0, method="Nelder-Mead", options=options)
    x, value, evaluations, converged = res.x, -res.fun, res.nfev, bool(res.success)
    for _ in range(MAX_SIMPLEX_REFRESHES):
        res = minimize(negated, x, method="Nelder-Mead", options=options)
        evaluations += res.nfev
        converged = bool(res.success)
        if -res.fun <= value + config.tolerance:
            if -res.fun > value:
                x, value = res.x, -res.fun
            break
        x, value = res.x, -res.fun
    return _Descent(index, np.asarray(x, dtype=float), float(value), int(evaluations), converged)


def _probe_stationarity(objective: Objective, x: np.ndarray, value: float) -> Tuple[np.ndarray, float, bool]:
    best_x, best_value = x, value
    for i in range(len(x)):
        for step in (PROBE_STEP, -PROBE_STEP):
            probe = x.copy()
            probe[i] += step
            v = objective(probe)
            if v > best_value:
                best_x, best_value = probe, v
    stationary = best_value - value < PROBE_GAIN
    return best_x, best_value, stationary


def _multistart(
    objective: Objective,
    starts: Sequence[np.ndarray],
    config: OptimizationConfig,
    cap: float,
    label: str
) -> Tuple[MaximizationResult, np.ndarray]:
    logger.info(f"Maximizing {label}: {len(starts)} starts, seed {config.seed}")

    def work(item):
        index, x0 = item
        descent = _descend(objective, index, np.asarray(x0, dtype=float), config)
        logger.debug(f"{label} restart {index}: {descent.value:.12f} ({descent.evaluations} evals)")
        return descent

    items = list(enumerate(starts))
    if config.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            descents = list(pool.map(work, items))
    else:
        descents = [work(item) for item in items]

    best = max(descents, key=lambda r: (r.value, -r.index))
    x, value, stationary = _probe_stationarity(objective, best.x, best.value)
    if not stationary:
        logger.warning(f"{label}: coordinate probe improved the optimum to {value:.12f}")
    if not best.converged:
        logger.warning(f"{label}: best restart {best.index} did not converge")
    if value > cap + CAP_SLACK:
        raise InconsistencyError(f"{label}: value {value} exceeds the algebraic cap {cap}")

    result = MaximizationResult(
        value=value,
        parameters=[float(v) for v in x],
        converged=best.converged,
        evaluations=sum(r.evaluations for r in descents),
        best_restart=best.index,
        seed=config.seed,
        stationary=stationary,
    )
    logger.info(f"{label}: best {value:.12f} from restart {best.index}")
    return result, x


def maximize_violation_phases(
    ineq: BellInequality,
    state: PureState,
    config: Optional[OptimizationConfig] = None,
    seeds: Sequence[PhaseSettings] = ()
) -> PhaseOptimum:
    """
    Maximize an inequality's LHS over multiport phase settings

    Args:
        ineq: probability-form inequality with ineq.d == state.d
        state: pure state
        config: restarts, tolerances, seed, symmetric_parties
        seeds: extra starting settings tried before the random starts

    Returns:
        PhaseOptimum with the best MaximizationResult and its PhaseSettings
    """
    config = config or OptimizationConfig()
    symmetric = config.symmetric_parties
    objective = phase_objective(ineq, state, symmetric)
    d = state.d
    rng = np.random.default_rng(config.seed)

    seeded = list(seeds)
    reference = _reference_seed(d)
    if reference is not None:
        seeded.insert(0, reference)
    if not symmetric:
        sym = maximize_violation_phases(ineq, state, config.model_copy(update={"symmetric_parties": True}))
        seeded.insert(0, sym.settings)

    starts = [params_from_settings(s, symmetric) for s in seeded]
    n_params = (2 if symmetric else 6) * (d - 1)
    while len(starts) < max(config.restarts, len(seeded)):
        starts.append(rng.uniform(0.0, 2 * np.pi, n_params))

    label = f"{ineq.label} on {state.label or 'state'}"
    result, x = _multistart(objective, starts, config, phase_cap(ineq), label)
    return PhaseOptimum(result, settings_from_params(x, d, symmetric))


def maximize_violation_qubit(
    cineq: CorrelationInequality,
    state: PureState,
    config: Optional[OptimizationConfig] = None
) -> QubitOptimum:
    """Maximize a correlation inequality over 12 Bloch angles"""
    config = config or OptimizationConfig()
    if state.d != 2:
        raise DimensionMismatchError(f"Qubit optimization needs d=2, got d={state.d}")
    objective = qubit_objective(cineq, state)
    rng = np.random.default_rng(config.seed)

    signs = correlation_maximizer(cineq)
    deterministic = np.column_stack([np.where(np.asarray(signs) > 0, 0.0, np.pi), np.zeros(6)]).ravel()
    starts = [deterministic]
    while len(starts) < max(config.restarts, 1):
        if len(starts) % 2:
            theta = np.full(6, np.pi / 2)
        else:
            theta = np.arccos(rng.uniform(-1.0, 1.0, 6))
        phi = rng.uniform(0.0, 2 * np.pi, 6)
        starts.append(np.column_stack([theta, phi]).ravel())

    label = f"{cineq.label} on {state.label or 'state'}"
    result, x = _multistart(objective, starts, config, correlation_cap(cineq), label)
    return QubitOptimum(result, _observable_mapping(x))


# Thresholds

def threshold(quantum_value: float, classical_bound: float, kind: str = "fidelity") -> ThresholdReport:
    """Fidelity F = 1 - B/Q or visibility V = B/Q"""
    if kind not in ("fidelity", "visibility"):
        raise ParameterRangeError(f"Threshold kind must be fidelity or visibility, got {kind}")
    if quantum_value <= 0:
        raise ParameterRangeError(f"Quantum value must be positive, got {quantum_value}")
    violated = quantum_value > classical_bound
    value = None
    if violated:
        visibility = classical_bound / quantum_value
        value = visibility if kind == "visibility" else 1.0 - visibility
    return ThresholdReport(
        quantum_value=quantum_value,
        classical_bound=classical_bound,
        kind=kind,
        threshold=value,
        violated=violated,
    )


# Sweeps

Inequality = Union[BellInequality, CorrelationInequality]


def _family_state(family: str, xi: float, beta: Optional[float]) -> PureState:
    if family == "ghz":
        return generalized_ghz(xi)
    if family == "w":
        if beta is None:
            raise ParameterRangeError("The w family needs beta")
        return generalized_w(beta, xi)
    raise ParameterRangeError(f"Unknown state family '{family}' (ghz or w)")


def optimize_value(
    inequality: Inequality,
    state: PureState,
    config: OptimizationConfig
) -> MaximizationResult:
    if isinstance(inequality, CorrelationInequality):
        return maximize_violation_qubit(inequality, state, config).result
    return maximize_violation_phases(inequality, state, config).result


def default_grid(points: Optional[int] = None) -> np.ndarray:
    return np.linspace(0.0, np.pi / 2, points or settings.SWEEP_GRID_POINTS)


def sweep(
    family: str,
    inequality: Inequality,
    grid: Optional[Sequence[float]] = None,
    config: Optional[OptimizationConfig] = None,
    beta: Optional[float] = None
) -> List[SweepRow]:
    """
    Optimized violation along a one-parameter state family

    Args:
        family: "ghz" (cos xi|000> + sin xi|111>) or "w" (generalized W at fixed beta)
        inequality: correlation form, or probability form with d = 2
        grid: xi values (default: SWEEP_GRID_POINTS points on [0, pi/2])
        config: optimizer configuration; each row derives its own seed from it
        beta: W-family parameter

    Returns:
        Rows ordered by grid index
    """
    config = config or OptimizationConfig()
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if len(grid) == 0:
        raise ParameterRangeError("Sweep grid is empty")
    if isinstance(inequality, BellInequality) and inequality.d != 2:
        raise DimensionMismatchError("Sweeps run on three-qubit families; need d=2")
    bound = float(inequality.bound)
    if bound == 0:
        raise ParameterRangeError("Sweep ratios need a nonzero bound")

    row_threads = config.threads if len(grid) > 1 else 1
    row_config = config.model_copy(update={"threads": 1}) if row_threads > 1 else config

    def work(index: int) -> SweepRow:
        xi = float(grid[index])
        state = _family_state(family, xi, beta)
        seed = int(np.random.default_rng([config.seed, index]).integers(2 ** 31))
        result = optimize_value(inequality, state, row_config.model_copy(update={"seed": seed}))
        return SweepRow(
            index=index,
            inequality=inequality.label,
            xi=xi,
            beta=beta,
            value=result.value,
            bound=bound,
            ratio=result.value / bound,
            converged=result.converged,
            parameters=result.parameters,
        )

    logger.info(f"Sweep {inequality.label} over {family} family, {len(grid)} points")
    if row_threads > 1:
        with ThreadPoolExecutor(max_workers=row_threads) as pool:
            rows = list(pool.map(work, range(len(grid))))
    else:
        rows = [work(i) for i in range(len(grid))]
    for row in rows:
        if not row.converged:
            logger.warning(f"Sweep row {row.index} (xi={row.xi:.6f}) did not converge")
    return rows


def sweep_w_family(
    inequality: Inequality,
    betas: Sequence[float],
    grid: Optional[Sequence[float]] = None,
    config: Optional[OptimizationConfig] = None
) -> Dict[float, List[SweepRow]]:
    return {float(b): sweep("w", inequality, grid, config, beta=float(b)) for b in betas}


def is_violated(value: float, bound: float) -> bool:
    return value > bound + settings.INCONCLUSIVE_MARGIN


def crossing_bracket(rows: Sequence[SweepRow]) -> Optional[Tuple[float, float]]:
    """(last non-violating xi, first violating xi) around the first violation onset"""
    for prev, row in zip(rows, rows[1:]):
        if not is_violated(prev.value, prev.bound) and is_violated(row.value, row.bound):
            return prev.xi, row.xi
    return None


def locate_crossing(
    family: str,
    inequality: Inequality,
    lo: float,
    hi: float,
    config: Optional[OptimizationConfig] = None,
    beta: Optional[float] = None,
    tolerance: Optional[float] = None
) -> float:
    """Bisect the violation onset between a non-violating lo and a violating hi"""
    config = config or OptimizationConfig()
    tolerance = tolerance or settings.CROSSING_TOLERANCE
    bound = float(inequality.bound)

    def violated(xi: float) -> bool:
        state = _family_state(family, xi, beta)
        return is_violated(optimize_value(inequality, state, config).value, bound)

    if violated(lo) or not violated(hi):
        raise ParameterRangeError(f"[{lo}, {hi}] does not bracket a violation onset")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if violated(mid):
            hi = mid
        else:
            lo = mid
        logger.debug(f"Crossing bracket [{lo:.9f}, {hi:.9f}]")
    crossing = 0.5 * (lo + hi)
    logger.info(f"Violation onset for {inequality.label} at xi = {crossing:.9f}")
    return crossing


# Entangled-state probe

def probe_state(
    state: PureState,
    index: int,
    source: str,
    cineq: CorrelationInequality,
    config: OptimizationConfig
) -> ProbeSample:
    report = entanglement_check(state)
    if report.is_product:
        return ProbeSample(index=index, source=source, is_entangled=False, status="excluded")

    value = maximize_violation_qubit(cineq, state, config).result.value
    margin = value - cineq.bound
    if margin >= settings.INCONCLUSIVE_MARGIN:
        status = "violated"
    elif margin > -settings.INCONCLUSIVE_MARGIN:
        status = "inconclusive"
    else:
        status = "counterexample"
        logger.warning(f"Probe sample {index} ({source}) is entangled but reached only {value:.10f}")
    return ProbeSample(
        index=index, source=source, is_entangled=True, value=value, margin=margin, status=status
    )


def summarize_probe(samples: List[ProbeSample], seed: int) -> ProbeReport:
    entangled = [s for s in samples if s.is_entangled]
    margins = [s.margin for s in entangled if s.margin is not None]
    return ProbeReport(
        sample_count=len(samples),
        seed=seed,
        entangled_count=len(entangled),
        excluded_count=len(samples) - len(entangled),
        inconclusive_count=sum(s.status == "inconclusive" for s in samples),
        counterexamples=[s.index for s in samples if s.status == "counterexample"],
        min_margin=min(margins) if margins else None,
        samples=samples,
    )


def violates_all_entangled_probe(
    sample_count: int,
    seed: int,
    config: Optional[OptimizationConfig] = None,
    cineq: Optional[CorrelationInequality] = None
) -> ProbeReport:
    """
    Search for entangled three-qubit states that do not violate a correlation inequality

    Even samples draw canonical five-parameter states, odd samples Haar-random states.
    """
    if sample_count < 1:
        raise ParameterRangeError("sample_count must be >= 1")
    config = config or OptimizationConfig()
    cineq = cineq or catalog("corr-quartit-qubit")
    rng = np.random.default_rng(seed)

    samples = []
    for index in range(sample_count):
        if index % 2 == 0:
            state = canonical_state(rng.dirichlet(np.ones(5)), rng.uniform(0.0, np.pi))
            source = "canonical"
        else:
            state = random_pure_state(int(rng.integers(2 ** 31)))
            source = "haar"
        sample_config = config.model_copy(update={"seed": int(rng.integers(2 ** 31))})
        samples.append(probe_state(state, index, source, cineq, sample_config))
        logger.debug(f"Probe sample {index}: {samples[-1].status}")

    report = summarize_probe(samples, seed)
    logger.info(
        f"Probe: {report.entangled_count} entangled of {sample_count}, "
        f"{len(report.counterexamples)} counterexamples, min margin {report.min_margin}"
    )
    return report
