"""
Inequality Core - evaluation, symmetries and conversions between forms
"""

import logging
from fractions import Fraction
from itertools import product
from typing import Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import DimensionMismatchError, InconsistencyError, ParameterRangeError
from models.inequality import (
    PAIRS,
    PARTIES,
    SETTING_TRIPLES,
    BellInequality,
    CorrelationInequality,
    CorrelationValues,
    ModularProbabilityTable,
    Triple,
    triple_index,
)
from models.reports import EquivalenceResult

logger = logging.getLogger(__name__)

NO_SIGNALING_TOLERANCE = 1e-10
EQUIVALENCE_TOLERANCE = 1e-10
_SIGNS = np.array([1.0, -1.0])

Permutation = Union[str, Sequence[int]]


class NormalizedCoefficients(NamedTuple):
    values: np.ndarray
    out_of_range: bool


def evaluate_lhs(ineq: BellInequality, table: ModularProbabilityTable) -> float:
    """Sum of f * P(a_i+b_j+c_k = r) over all triples and residues"""
    if ineq.d != table.d:
        raise DimensionMismatchError(
            f"Inequality has d={ineq.d} but probability table has d={table.d}"
        )
    return float(np.sum(ineq.values * table.p))


def shift_outcomes(ineq: BellInequality, m: int) -> BellInequality:
    """Coefficient of residue r becomes the old coefficient of residue r - m (mod d)"""
    if not 0 <= m <= ineq.d - 1:
        raise ParameterRangeError(f"Shift must lie in [0, {ineq.d - 1}], got {m}")
    return BellInequality(
        d=ineq.d,
        numerators=np.roll(ineq.numerators, m, axis=-1),
        bound_numerator=ineq.bound_numerator,
        label=ineq.label if m == 0 else f"{ineq.label}+shift{m}",
        denominator=ineq.denominator,
        outcomes=ineq.outcomes,
    )


def _permutation_axes(sigma: Permutation) -> Tuple[int, int, int]:
    if isinstance(sigma, str):
        if sorted(sigma) != sorted(PARTIES):
            raise ParameterRangeError(f"'{sigma}' is not a permutation of {PARTIES}")
        return tuple(PARTIES.index(p) for p in sigma)
    axes = tuple(int(x) for x in sigma)
    if sorted(axes) != [0, 1, 2]:
        raise ParameterRangeError(f"{sigma} is not a permutation of (0, 1, 2)")
    return axes


def permute_parties(ineq: BellInequality, sigma: Permutation) -> BellInequality:
    """
    Relabel parties

    Args:
        ineq: inequality to relabel
        sigma: new party order, e.g. "BAC" swaps A and B; position p of the
            output takes the settings of party sigma[p] of the input
    """
    axes = _permutation_axes(sigma)
    return BellInequality(
        d=ineq.d,
        numerators=np.transpose(ineq.numerators, axes + (3,)),
        bound_numerator=ineq.bound_numerator,
        label=ineq.label,
        denominator=ineq.denominator,
        outcomes=ineq.outcomes,
    )


def normalized_coefficients(ineq: BellInequality) -> NormalizedCoefficients:
    """f / (d(d-1)), flagged when any entry leaves [-1, 1]"""
    values = ineq.values / (ineq.d * (ineq.d - 1))
    return NormalizedCoefficients(values, bool((np.abs(values) > 1.0).any()))


def _delta_key(key) -> Triple:
    if isinstance(key, str):
        if len(key) != 3 or not key.isdigit():
            raise ParameterRangeError(f"Setting triple '{key}' must look like '112'")
        key = tuple(int(c) for c in key)
    triple_index(key)
    return tuple(key)


def reform_lhs(
    ineq: BellInequality,
    deltas: Mapping[Union[Triple, str], int],
    scale: int = 1
) -> BellInequality:
    """
    Rewrite an inequality using sum_r P(. = r) = 1

    Subtracts delta(i,j,k) from every residue coefficient of the triple and
    sum(deltas) from the bound, then divides everything by scale. The
    classical maximum transforms the same way.
    """
    if int(scale) != scale or scale < 1:
        raise ParameterRangeError(f"scale must be a positive integer, got {scale}")
    shifts = {}
    for key, delta in deltas.items():
        if int(delta) != delta:
            raise ParameterRangeError(f"delta for {key} must be an integer, got {delta}")
        shifts[_delta_key(key)] = int(delta)

    rows = {}
    for triple, row in ineq.rows():
        delta = shifts.get(triple, 0)
        rows[triple] = [(c - delta) / scale for c in row]
    bound = (ineq.bound - sum(shifts.values())) / Fraction(scale)

    return BellInequality.from_rows(
        ineq.d, rows, bound, label=f"{ineq.label}-reformed", outcomes=ineq.outcomes
    )


def aggregate_residues(joint: np.ndarray, d: int) -> np.ndarray:
    """
    P(a,b,c) over the last three axes -> P(a+b+c = r mod d)

    Outcome alphabets smaller than d are allowed (binary outcomes summed mod 4, etc.)
    """
    joint = np.asarray(joint, dtype=float)
    na, nb, nc = joint.shape[-3:]
    sums = (
        np.arange(na)[:, None, None] + np.arange(nb)[None, :, None] + np.arange(nc)[None, None, :]
    ) % d
    lead = joint.shape[:-3]
    flat = joint.reshape(lead + (-1,))
    out = np.zeros(lead + (d,))
    for r in range(d):
        out[..., r] = flat[..., (sums.ravel() == r)].sum(axis=-1)
    return out


def strategy_joint(strategy: Sequence[int], outcomes: int = 2) -> np.ndarray:
    """Deterministic joint P(a,b,c|i,j,k) of shape (2,2,2,o,o,o)"""
    a1, a2, b1, b2, c1, c2 = strategy
    joint = np.zeros((2, 2, 2, outcomes, outcomes, outcomes))
    for i, j, k in SETTING_TRIPLES:
        a = (a1, a2)[i - 1]
        b = (b1, b2)[j - 1]
        c = (c1, c2)[k - 1]
        joint[i - 1, j - 1, k - 1, a, b, c] = 1.0
    return joint


def table_from_joint(joint: np.ndarray, d: int) -> ModularProbabilityTable:
    return ModularProbabilityTable(d=d, p=aggregate_residues(joint, d))


def expectations_from_joint(joint: np.ndarray, d: int = 2) -> CorrelationValues:
    """
    Dichotomic expectations from a full binary joint distribution

    Args:
        joint: P(a,b,c|i,j,k) of shape (2,2,2,2,2,2), settings first
        d: outcome count, must be 2

    Raises:
        InconsistencyError: marginals depend on a traced-out party's setting
    """
    if d != 2:
        raise DimensionMismatchError(f"Correlation values need binary outcomes, got d={d}")
    joint = np.asarray(joint, dtype=float)
    if joint.shape != (2, 2, 2, 2, 2, 2):
        raise DimensionMismatchError(f"Joint distribution must have shape (2,)*6, got {joint.shape}")
    norms = joint.sum(axis=(3, 4, 5))
    if np.abs(norms - 1.0).max() > NO_SIGNALING_TOLERANCE:
        raise InconsistencyError("Joint distribution is not normalized for every setting triple")

    triple = np.einsum("ijkabc,a,b,c->ijk", joint, _SIGNS, _SIGNS, _SIGNS)

    # two-party marginals, indexed [i, j, k, x, y] with the third party summed out
    marg_ab = joint.sum(axis=5)
    marg_ac = joint.sum(axis=4)
    marg_bc = joint.sum(axis=3)
    for name, marg, axis in (("AB", marg_ab, 2), ("AC", marg_ac, 1), ("BC", marg_bc, 0)):
        spread = np.abs(np.take(marg, 0, axis=axis) - np.take(marg, 1, axis=axis)).max()
        if spread > NO_SIGNALING_TOLERANCE:
            raise InconsistencyError(
                f"No-signaling violated: {name} marginal depends on the remaining setting "
                f"(deviation {spread:.3e})"
            )

    pairs = np.stack([
        np.einsum("ijxy,x,y->ij", marg_ab[:, :, 0], _SIGNS, _SIGNS),
        np.einsum("ikxy,x,y->ik", marg_ac[:, 0], _SIGNS, _SIGNS),
        np.einsum("jkxy,x,y->jk", marg_bc[0], _SIGNS, _SIGNS),
    ])

    single_a = marg_ab.sum(axis=4)  # [i, j, k, a]
    single_b = marg_ab.sum(axis=3)  # [i, j, k, b]
    single_c = marg_ac.sum(axis=3)  # [i, j, k, c]
    for name, single, axes in (("A", single_a, (1, 2)), ("B", single_b, (0, 2)), ("C", single_c, (0, 1))):
        for axis in axes:
            spread = np.abs(np.take(single, 0, axis=axis) - np.take(single, 1, axis=axis)).max()
            if spread > NO_SIGNALING_TOLERANCE:
                raise InconsistencyError(f"No-signaling violated for the {name} marginal")
    singles = np.stack([
        single_a[:, 0, 0] @ _SIGNS,
        single_b[0, :, 0] @ _SIGNS,
        single_c[0, 0, :] @ _SIGNS,
    ])
    return CorrelationValues(
        triple=np.clip(triple, -1.0, 1.0),
        pairs=np.clip(pairs, -1.0, 1.0),
        singles=np.clip(singles, -1.0, 1.0),
    )


def evaluate_correlation(cineq: CorrelationInequality, vals: CorrelationValues) -> float:
    return float(cineq.as_vector() @ vals.as_vector())


def correlations_of_assignment(signs: Sequence[int]) -> CorrelationValues:
    """E values of a deterministic +/-1 assignment (A1, A2, B1, B2, C1, C2)"""
    a = np.asarray(signs[0:2], dtype=float)
    b = np.asarray(signs[2:4], dtype=float)
    c = np.asarray(signs[4:6], dtype=float)
    return CorrelationValues(
        triple=np.einsum("i,j,k->ijk", a, b, c),
        pairs=np.stack([np.outer(a, b), np.outer(a, c), np.outer(b, c)]),
        singles=np.stack([a, b, c]),
    )


def _local_behaviours(seed: int, samples: int):
    """All 64 binary deterministic joints followed by seeded random mixtures of them"""
    strategies = list(product((0, 1), repeat=6))
    vertices = np.stack([strategy_joint(s) for s in strategies])
    for index, strategy in enumerate(strategies):
        yield vertices[index], f"deterministic strategy {strategy}"
    rng = np.random.default_rng(seed)
    for n in range(samples):
        weights = rng.dirichlet(np.ones(len(strategies)))
        yield np.tensordot(weights, vertices, axes=1), f"random local mixture #{n}"


def prob_corr_equivalence(
    pineq: BellInequality,
    cineq: CorrelationInequality,
    seed: int = 0,
    samples: int = 32
) -> EquivalenceResult:
    """
    Fit LHS_prob = scale * LHS_corr + offset over binary local behaviours

    Probability-form residues are taken mod pineq.d with local outcomes in {0, 1}.
    The fit is least squares; equivalence holds when the largest residual is
    within 1e-10.
    """
    prob_values, corr_values, joints, descriptions = [], [], [], []
    for joint, description in _local_behaviours(seed, samples):
        prob_values.append(evaluate_lhs(pineq, table_from_joint(joint, pineq.d)))
        corr_values.append(evaluate_correlation(cineq, expectations_from_joint(joint)))
        joints.append(joint)
        descriptions.append(description)

    y = np.asarray(prob_values)
    x = np.asarray(corr_values)
    design = np.column_stack([x, np.ones_like(x)])
    (scale, offset), *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = np.abs(y - (scale * x + offset))
    worst = int(np.argmax(residuals))
    max_discrepancy = float(residuals[worst])
    equivalent = max_discrepancy <= EQUIVALENCE_TOLERANCE and abs(scale) > EQUIVALENCE_TOLERANCE

    logger.info(
        f"Equivalence {pineq.label} ~ {cineq.label}: scale={scale:.12g} offset={offset:.12g} "
        f"max discrepancy {max_discrepancy:.3e}"
    )
    if equivalent:
        return EquivalenceResult(
            equivalent=True,
            scale=float(scale),
            offset=float(offset),
            max_discrepancy=max_discrepancy,
            checked_behaviours=len(y),
        )
    return EquivalenceResult(
        equivalent=False,
        scale=float(scale),
        offset=float(offset),
        max_discrepancy=max_discrepancy,
        checked_behaviours=len(y),
        witness=[float(v) for v in joints[worst].ravel()],
        witness_description=descriptions[worst],
    )


class RestrictedInequality(NamedTuple):
    inequality: CorrelationInequality
    constant: float


def restrict_party_deterministic(
    cineq: CorrelationInequality,
    party: str,
    values: Tuple[int, int],
    label: Optional[str] = None
) -> CorrelationInequality:
    """
    Fix one party's outcomes to constants and collect the remaining terms

    Args:
        cineq: three-party correlation inequality
        party: "A", "B" or "C"
        values: (+/-1, +/-1) for that party's settings 1 and 2

    Returns:
        Two-party inequality with the constant moved into the bound
    """
    return restrict_with_constant(cineq, party, values, label).inequality


def restrict_with_constant(
    cineq: CorrelationInequality,
    party: str,
    values: Tuple[int, int],
    label: Optional[str] = None
) -> RestrictedInequality:
    if party not in cineq.parties or len(cineq.parties) != 3:
        raise ParameterRangeError(f"Party {party} is not restrictable in '{cineq.parties}'")
    if any(v not in (-1, 1) for v in values) or len(values) != 2:
        raise ParameterRangeError(f"Deterministic values must be two of +/-1, got {values}")

    v = np.asarray(values, dtype=float)
    fixed = PARTIES.index(party)
    rest = [p for p in PARTIES if p != party]
    pair_name = "".join(rest)
    pair_index = PAIRS.index(pair_name)

    pairs = np.zeros((3, 2, 2))
    singles = np.zeros((3, 2))

    # E(XYZ) -> v * E(XY)
    pairs[pair_index] = np.tensordot(cineq.triple, v, axes=([fixed], [0]))
    pairs[pair_index] += cineq.pairs[pair_index]

    # E(X Z) -> v * E(X)
    for other in rest:
        involved = "".join(sorted(party + other, key=PARTIES.index))
        coeffs = cineq.pairs[PAIRS.index(involved)]
        if PARTIES.index(other) < fixed:
            singles[PARTIES.index(other)] += coeffs @ v
        else:
            singles[PARTIES.index(other)] += v @ coeffs
        singles[PARTIES.index(other)] += cineq.singles[PARTIES.index(other)]

    constant = float(cineq.singles[fixed] @ v)
    signs = "".join("+" if x > 0 else "-" for x in values)
    restricted = CorrelationInequality(
        pairs=pairs,
        singles=singles,
        bound=cineq.bound - constant,
        label=label or f"{cineq.label}|{party}={signs}",
        parties=pair_name,
    )
    logger.debug(f"Restricted {cineq.label} at {party}={values}: constant {constant}")
    return RestrictedInequality(restricted, constant)
