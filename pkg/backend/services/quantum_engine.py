"""
Quantum Engine - states, multiport beam splitter measurements, modular tables

Tensor contraction is the reference path; closed forms are checked against it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np

from models.errors import DimensionMismatchError, InconsistencyError, ParameterRangeError
from models.inequality import PARTIES, SETTING_TRIPLES, CorrelationValues, ModularProbabilityTable, Triple
from models.quantum import NoiseParameter, PhaseSettings, PureState, QubitObservable
from models.reports import EntanglementReport
from services.inequality_core import aggregate_residues

logger = logging.getLogger(__name__)

ANGLE_TOLERANCE = 1e-12
WEIGHT_TOLERANCE = 1e-12
PRODUCT_EIGENVALUE_CUTOFF = 1e-10

PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

CUTS = {"A": "A|BC", "B": "B|AC", "C": "C|AB"}


def _check_angle(name: str, value: float, upper: float):
    if not -ANGLE_TOLERANCE <= value <= upper + ANGLE_TOLERANCE:
        raise ParameterRangeError(f"{name} must lie in [0, {upper:.6f}], got {value}")


def ghz_state(d: int) -> PureState:
    """(1/sqrt(d)) sum_k |kkk>"""
    if d < 2:
        raise ParameterRangeError(f"d must be >= 2, got {d}")
    amps = np.zeros((d, d, d), dtype=complex)
    for k in range(d):
        amps[k, k, k] = 1.0 / np.sqrt(d)
    return PureState(amps, label=f"ghz{d}")


def generalized_ghz(xi: float) -> PureState:
    """cos(xi)|000> + sin(xi)|111>"""
    _check_angle("xi", xi, np.pi / 2)
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[0, 0, 0] = np.cos(xi)
    amps[1, 1, 1] = np.sin(xi)
    return PureState(amps, label=f"ghz(xi={xi:.6g})")


def generalized_w(beta: float, xi: float) -> PureState:
    """sin(b)cos(xi)|100> + sin(b)sin(xi)|010> + cos(b)|001>"""
    _check_angle("beta", beta, np.pi / 2)
    _check_angle("xi", xi, np.pi / 2)
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[1, 0, 0] = np.sin(beta) * np.cos(xi)
    amps[0, 1, 0] = np.sin(beta) * np.sin(xi)
    amps[0, 0, 1] = np.cos(beta)
    return PureState(amps, label=f"w(beta={beta:.6g},xi={xi:.6g})")


def w_state() -> PureState:
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[1, 0, 0] = amps[0, 1, 0] = amps[0, 0, 1] = 1.0 / np.sqrt(3)
    return PureState(amps, label="w")


def product_state(d: int = 2) -> PureState:
    amps = np.zeros((d, d, d), dtype=complex)
    amps[0, 0, 0] = 1.0
    return PureState(amps, label="product")


def canonical_state(mu: Sequence[float], phi: float) -> PureState:
    """
    Five-parameter representative of three-qubit pure states up to local unitaries

    sqrt(mu0)|000> + sqrt(mu1) e^{i phi}|100> + sqrt(mu2)|101> + sqrt(mu3)|110> + sqrt(mu4)|111>
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (5,):
        raise ParameterRangeError(f"Need five weights mu0..mu4, got {mu.shape}")
    if (mu < 0).any():
        raise ParameterRangeError("Weights mu must be non-negative")
    if abs(mu.sum() - 1.0) > WEIGHT_TOLERANCE:
        raise ParameterRangeError(f"Weights mu must sum to 1, got {mu.sum():.15f}")
    _check_angle("phi", phi, np.pi)

    mu = mu / mu.sum()
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[0, 0, 0] = np.sqrt(mu[0])
    amps[1, 0, 0] = np.sqrt(mu[1]) * np.exp(1j * phi)
    amps[1, 0, 1] = np.sqrt(mu[2])
    amps[1, 1, 0] = np.sqrt(mu[3])
    amps[1, 1, 1] = np.sqrt(mu[4])
    return PureState(amps, label="canonical")


def random_pure_state(seed: int, d: int = 2) -> PureState:
    """Haar-random pure state from a normalized complex Gaussian vector"""
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(d ** 3) + 1j * rng.standard_normal(d ** 3)
    vec /= np.linalg.norm(vec)
    return PureState(vec.reshape(d, d, d), label=f"random(seed={seed})")


def multiport_unitary(d: int, phases: Sequence[float]) -> np.ndarray:
    """U_kl = alpha^{kl} e^{i phi_l} / sqrt(d), alpha = exp(2 pi i / d)"""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (d,):
        raise DimensionMismatchError(f"Phase vector must have length {d}, got {phases.shape}")
    k = np.arange(d)
    alpha = np.exp(2j * np.pi * np.outer(k, k) / d)
    return alpha * np.exp(1j * phases)[None, :] / np.sqrt(d)


def _unitaries(phase_settings: PhaseSettings) -> np.ndarray:
    """U[party, setting] of shape (3, 2, d, d)"""
    d = phase_settings.d
    return np.array([
        [multiport_unitary(d, phase_settings.phases[p, s]) for s in range(2)]
        for p in range(3)
    ])


def _check_dims(state: PureState, phase_settings: PhaseSettings):
    if state.d != phase_settings.d:
        raise DimensionMismatchError(
            f"State has d={state.d} but settings have {phase_settings.d} phases"
        )


def joint_distribution(
    state: PureState,
    phase_settings: PhaseSettings,
    triple: Triple
) -> np.ndarray:
    """P(a, b, c) = |<abc| U_A (x) U_B (x) U_C |psi>|^2 for one setting triple"""
    _check_dims(state, phase_settings)
    i, j, k = triple
    ua = multiport_unitary(state.d, phase_settings.vector("A", i))
    ub = multiport_unitary(state.d, phase_settings.vector("B", j))
    uc = multiport_unitary(state.d, phase_settings.vector("C", k))
    rotated = np.einsum("ax,by,cz,xyz->abc", ua, ub, uc, state.amplitudes, optimize=True)
    return np.abs(rotated) ** 2


def all_joint_distributions(state: PureState, phase_settings: PhaseSettings) -> np.ndarray:
    """P(a,b,c|i,j,k) for all eight triples at once, shape (2,2,2,d,d,d)"""
    _check_dims(state, phase_settings)
    u = _unitaries(phase_settings)
    rotated = np.einsum(
        "iax,jby,kcz,xyz->ijkabc", u[0], u[1], u[2], state.amplitudes, optimize=True
    )
    return np.abs(rotated) ** 2


def modular_table(
    distributions: Union[np.ndarray, Mapping[Triple, np.ndarray]],
    d: Optional[int] = None
) -> ModularProbabilityTable:
    """
    Aggregate joint distributions by residue of a + b + c

    Args:
        distributions: array (2,2,2,o,o,o) or {(i,j,k): (o,o,o) array}
        d: modulus (defaults to the local outcome count)
    """
    if isinstance(distributions, Mapping):
        missing = [t for t in SETTING_TRIPLES if t not in distributions]
        if missing:
            raise DimensionMismatchError(f"Missing distributions for triples {missing}")
        stacked = np.array([distributions[t] for t in SETTING_TRIPLES], dtype=float)
        joint = stacked.reshape((2, 2, 2) + stacked.shape[1:])
    else:
        joint = np.asarray(distributions, dtype=float)
    d = joint.shape[-1] if d is None else d
    return ModularProbabilityTable(d=d, p=aggregate_residues(joint, d))


def quantum_table(
    state: PureState,
    phase_settings: PhaseSettings,
    threads: int = 1
) -> ModularProbabilityTable:
    """Modular table of a state under multiport settings, assembled in fixed triple order"""
    def work(triple: Triple) -> np.ndarray:
        return joint_distribution(state, phase_settings, triple)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, SETTING_TRIPLES))
    else:
        results = [work(t) for t in SETTING_TRIPLES]
    return modular_table(dict(zip(SETTING_TRIPLES, results)))


def ghz_closed_form_table(d: int, phase_settings: PhaseSettings) -> ModularProbabilityTable:
    """
    GHZ_d modular table in closed form

    P(r) = (1/d^2) [d + 2 sum_{m<l} cos(phi^l - phi^m + 2 pi (l - m) r / d)]
    with phi^l the sum of the three parties' phases.
    """
    if phase_settings.d != d:
        raise DimensionMismatchError(f"Settings have {phase_settings.d} phases, expected {d}")
    p = np.zeros((2, 2, 2, d))
    low, high = np.triu_indices(d, k=1)
    for i, j, k in SETTING_TRIPLES:
        phi = phase_settings.summed((i, j, k))
        for r in range(d):
            args = phi[high] - phi[low] + 2 * np.pi * (high - low) * r / d
            p[i - 1, j - 1, k - 1, r] = (d + 2 * np.cos(args).sum()) / d ** 2
    return ModularProbabilityTable(d=d, p=np.clip(p, 0.0, None))


def mix_white_noise(
    table: ModularProbabilityTable,
    noise: Union[NoiseParameter, float]
) -> ModularProbabilityTable:
    """(1 - F) p + F / d, the table of (1 - F)|psi><psi| + F I/d^3"""
    if not isinstance(noise, NoiseParameter):
        noise = NoiseParameter(float(noise))
    return ModularProbabilityTable(d=table.d, p=(1.0 - noise.F) * table.p + noise.F / table.d)


def pauli_tensor(state: PureState) -> np.ndarray:
    """T[m, n, l] = <psi| sigma_m (x) sigma_n (x) sigma_l |psi>, sigma_0 = identity"""
    if state.d != 2:
        raise DimensionMismatchError(f"Pauli tensor needs qubits, got d={state.d}")
    psi = state.amplitudes
    return np.einsum(
        "abc,mad,nbe,lcf,def->mnl", psi.conj(), PAULI, PAULI, PAULI, psi, optimize=True
    ).real


def _bloch_array(observables) -> np.ndarray:
    """Observables as a (3 parties, 2 settings, 3) array of unit vectors"""
    if isinstance(observables, Mapping):
        rows = [[observables[f"{p}{s}"] for s in (1, 2)] for p in PARTIES]
    else:
        rows = observables
    out = np.array([
        [obs.vector if isinstance(obs, QubitObservable) else np.asarray(obs, dtype=float) for obs in pair]
        for pair in rows
    ], dtype=float)
    if out.shape != (3, 2, 3):
        raise DimensionMismatchError(f"Need two Bloch vectors per party, got shape {out.shape}")
    return out


def expectations_from_tensor(tensor: np.ndarray, vectors: np.ndarray) -> CorrelationValues:
    """Correlation values from a Pauli tensor and (3, 2, 3) Bloch vectors"""
    na, nb, nc = vectors
    t = tensor
    triple = np.einsum("ix,jy,kz,xyz->ijk", na, nb, nc, t[1:, 1:, 1:])
    pairs = np.stack([
        np.einsum("ix,jy,xy->ij", na, nb, t[1:, 1:, 0]),
        np.einsum("ix,ky,xy->ik", na, nc, t[1:, 0, 1:]),
        np.einsum("jx,ky,xy->jk", nb, nc, t[0, 1:, 1:]),
    ])
    singles = np.stack([na @ t[1:, 0, 0], nb @ t[0, 1:, 0], nc @ t[0, 0, 1:]])
    return CorrelationValues(
        triple=np.clip(triple, -1.0, 1.0),
        pairs=np.clip(pairs, -1.0, 1.0),
        singles=np.clip(singles, -1.0, 1.0),
    )


def qubit_expectations(state: PureState, observables) -> CorrelationValues:
    """
    E(A_iB_jC_k), E(X_iY_j), E(X_i) for dichotomic qubit observables

    Args:
        state: three-qubit pure state
        observables: {"A1": QubitObservable, ...} or nested [[A1, A2], [B1, B2], [C1, C2]]
    """
    return expectations_from_tensor(pauli_tensor(state), _bloch_array(observables))


def multiport_bloch_observable(phases: Sequence[float]) -> QubitObservable:
    """The d = 2 multiport device as a Bloch measurement (outcome 0 -> +1)"""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (2,):
        raise DimensionMismatchError(f"d=2 device takes two phases, got {phases.shape}")
    delta = phases[1] - phases[0]
    return QubitObservable(float(np.cos(delta)), float(-np.sin(delta)), 0.0)


def reduced_state(state: PureState, party: str) -> np.ndarray:
    psi = state.amplitudes
    subscripts = {"A": "abc,xbc->ax", "B": "abc,axc->bx", "C": "abc,abx->cx"}[party]
    return np.einsum(subscripts, psi, psi.conj())


def entanglement_check(state: PureState) -> EntanglementReport:
    """Product across X|rest iff the reduced state of X is pure"""
    second: Dict[str, float] = {}
    cuts = []
    for party in PARTIES:
        eigenvalues = np.sort(np.linalg.eigvalsh(reduced_state(state, party)))[::-1]
        second[party] = float(max(eigenvalues[1], 0.0))
        if second[party] < PRODUCT_EIGENVALUE_CUTOFF:
            cuts.append(CUTS[party])
    trace = float(np.trace(reduced_state(state, "A")).real)
    if abs(trace - 1.0) > 1e-10:
        raise InconsistencyError(f"Reduced state has trace {trace}")
    return EntanglementReport(
        is_product=bool(cuts),
        separable_cuts=cuts,
        reduced_second_eigenvalues=second,
    )
