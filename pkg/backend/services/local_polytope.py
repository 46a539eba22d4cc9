"""
Local Polytope Service - exhaustive local-hidden-variable engine

Deterministic strategies are (a1, a2, b1, b2, c1, c2), enumerated
lexicographically. Classical maxima are exact (integer numerators); facet
certificates use the affine rank of saturating vertices in Collins-Gisin
coordinates.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from config import settings
from models.errors import ParameterRangeError, ResourceGuardError
from models.inequality import PARTIES, SETTING_TRIPLES, BellInequality, CorrelationInequality, ModularProbabilityTable
from models.reports import TightnessReport
from services.inequality_core import correlations_of_assignment, evaluate_lhs
from services.serialization import dump_inequality
from utils.exact_rank import bareiss_rank, modular_rank

logger = logging.getLogger(__name__)


class DeterministicStrategy(NamedTuple):
    a1: int
    a2: int
    b1: int
    b2: int
    c1: int
    c2: int

    def outcome(self, party: str, setting: int) -> int:
        return self[2 * PARTIES.index(party) + setting - 1]

    def validate(self, d: int) -> "DeterministicStrategy":
        if any(not 0 <= x < d for x in self):
            raise ParameterRangeError(f"Strategy {tuple(self)} has outcomes outside 0..{d - 1}")
        return self


class ClassicalMax(NamedTuple):
    value: Fraction
    maximizer_count: int
    witness: DeterministicStrategy


def polytope_dim(outcomes: int) -> int:
    """D = (2o - 1)^3 - 1"""
    return (2 * outcomes - 1) ** 3 - 1


def _check_enumerable(outcomes: int):
    if outcomes < 2:
        raise ParameterRangeError(f"Need at least two outcomes, got {outcomes}")
    if outcomes > settings.MAX_ENUMERATION_D:
        raise ResourceGuardError(
            f"Enumerating {outcomes}**6 strategies exceeds MAX_ENUMERATION_D={settings.MAX_ENUMERATION_D}"
        )


def strategy_array(outcomes: int) -> np.ndarray:
    """All o**6 strategies as rows, lexicographic in (a1, a2, b1, b2, c1, c2)"""
    _check_enumerable(outcomes)
    index = np.arange(outcomes ** 6)
    return np.stack(np.unravel_index(index, (outcomes,) * 6), axis=1).astype(np.int64)


def enumerate_strategies(d: int) -> Iterator[DeterministicStrategy]:
    _check_enumerable(d)
    for values in product(range(d), repeat=6):
        yield DeterministicStrategy(*values)


def strategy_table(strategy: DeterministicStrategy, d: int) -> ModularProbabilityTable:
    """Deterministic modular table: p(i,j,k,r) = 1 iff a_i + b_j + c_k = r (mod d)"""
    s = DeterministicStrategy(*strategy).validate(d)
    p = np.zeros((2, 2, 2, d))
    for i, j, k in SETTING_TRIPLES:
        r = (s.outcome("A", i) + s.outcome("B", j) + s.outcome("C", k)) % d
        p[i - 1, j - 1, k - 1, r] = 1.0
    return ModularProbabilityTable(d=d, p=p)


def lhs_numerators(ineq: BellInequality, strategies: np.ndarray) -> np.ndarray:
    """Integer LHS numerators (over ineq.denominator) for each strategy row"""
    strategies = np.asarray(strategies, dtype=np.int64)
    total = np.zeros(len(strategies), dtype=np.int64)
    for i, j, k in SETTING_TRIPLES:
        r = (strategies[:, i - 1] + strategies[:, 1 + j] + strategies[:, 3 + k]) % ineq.d
        total += ineq.numerators[i - 1, j - 1, k - 1][r]
    return total


def _chunk_max(ineq: BellInequality, chunk: np.ndarray, offset: int) -> Tuple[int, int, int]:
    values = lhs_numerators(ineq, chunk)
    best = int(values.max())
    hits = np.flatnonzero(values == best)
    return best, int(hits.size), offset + int(hits[0])


def classical_max(
    ineq: BellInequality,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None
) -> ClassicalMax:
    """
    Exact maximum of the LHS over all deterministic strategies

    Chunks of the lexicographic enumeration are evaluated independently and
    combined by max with the lowest index breaking ties, so the witness is
    the lexicographically first maximizer regardless of scheduling.
    """
    threads = threads or settings.THREADS
    chunk_size = chunk_size or settings.STRATEGY_CHUNK_SIZE
    strategies = strategy_array(ineq.outcomes)
    starts = range(0, len(strategies), chunk_size)

    def work(start: int):
        return _chunk_max(ineq, strategies[start:start + chunk_size], start)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, starts))
    else:
        partials = [work(start) for start in starts]

    best = max(p[0] for p in partials)
    count = sum(p[1] for p in partials if p[0] == best)
    first = min(p[2] for p in partials if p[0] == best)

    value = Fraction(best, ineq.denominator)
    logger.debug(f"classical_max({ineq.label}) = {value} ({count} maximizers)")
    return ClassicalMax(value, count, DeterministicStrategy(*(int(x) for x in strategies[first])))


def _assignment_matrix() -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    assignments = list(product((1, -1), repeat=6))
    rows = np.stack([correlations_of_assignment(a).as_vector() for a in assignments])
    return rows, assignments


def classical_max_correlation(cineq: CorrelationInequality) -> float:
    """Maximum over the 64 deterministic +/-1 assignments"""
    rows, _ = _assignment_matrix()
    return float((rows @ cineq.as_vector()).max())


def correlation_maximizer(cineq: CorrelationInequality) -> Tuple[int, ...]:
    rows, assignments = _assignment_matrix()
    return assignments[int(np.argmax(rows @ cineq.as_vector()))]


def _local_coordinates(column: np.ndarray, outcomes: int) -> np.ndarray:
    """Per-party CG coordinates [1, e_{s1}(0..o-2), e_{s2}(0..o-2)] for strategy rows"""
    x1, x2 = column
    levels = np.arange(outcomes - 1)
    first = (x1[:, None] == levels).astype(np.int8)
    second = (x2[:, None] == levels).astype(np.int8)
    ones = np.ones((len(x1), 1), dtype=np.int8)
    return np.hstack([ones, first, second])


def cg_matrix(strategies: np.ndarray, outcomes: int) -> np.ndarray:
    """Collins-Gisin vectors (rows) of strategies, length (2o-1)^3 - 1"""
    s = np.asarray(strategies, dtype=np.int64)
    if s.ndim == 1:
        s = s[None, :]
    local = [_local_coordinates((s[:, 2 * p], s[:, 2 * p + 1]), outcomes) for p in range(3)]
    full = np.einsum("na,nb,nc->nabc", *local).reshape(len(s), -1)
    return full[:, 1:]


def cg_embed(strategy: DeterministicStrategy, d: int) -> np.ndarray:
    DeterministicStrategy(*strategy).validate(d)
    return cg_matrix(np.asarray(strategy), d)[0]


def _indicator_map(outcomes: int) -> np.ndarray:
    """M[s, a, x]: local indicator of outcome a under setting s in CG coordinates"""
    width = 2 * outcomes - 1
    m = np.zeros((2, outcomes, width), dtype=np.int64)
    for s in range(2):
        block = 1 + s * (outcomes - 1)
        for a in range(outcomes - 1):
            m[s, a, block + a] = 1
        m[s, outcomes - 1, 0] = 1
        m[s, outcomes - 1, block:block + outcomes - 1] = -1
    return m


def cg_functional(ineq: BellInequality) -> Tuple[int, np.ndarray]:
    """
    Integer functional (c, g) with LHS numerator = c + g . cg(s) for every strategy

    The LHS is expressed through joint outcome indicators, each of which
    expands into CG coordinates via the local indicator maps.
    """
    o = ineq.outcomes
    abc = np.arange(o)
    sums = (abc[:, None, None] + abc[None, :, None] + abc[None, None, :]) % ineq.d
    terms = ineq.numerators[:, :, :, sums]  # [i, j, k, a, b, c]
    m = _indicator_map(o)
    full = np.einsum("ijkabc,iax,jby,kcz->xyz", terms, m, m, m).reshape(-1)
    return int(full[0]), full[1:]


class _RankResult(NamedTuple):
    rank: int
    method: str


def affine_rank(points: np.ndarray, target: Optional[int] = None, seed: int = 0) -> _RankResult:
    """Dimension of the affine hull of integer points (rows)"""
    points = np.asarray(points, dtype=np.int64)
    if len(points) <= 1:
        return _RankResult(0, "bareiss")
    diffs = points[1:] - points[0]
    if diffs.size <= settings.EXACT_RANK_MAX_ENTRIES:
        return _RankResult(bareiss_rank(diffs), "bareiss")
    return _RankResult(
        modular_rank(diffs, prime=settings.RANK_PRIME, target=target, seed=seed),
        "modular",
    )


def facet_check(
    ineq: BellInequality,
    allow_large: bool = False,
    threads: Optional[int] = None
) -> TightnessReport:
    """
    Certify whether an inequality is a facet of the local polytope

    Args:
        ineq: probability-form inequality
        allow_large: lift the MAX_FACET_D resource guard
        threads: worker count for the strategy enumeration

    Returns:
        TightnessReport; is_facet iff valid, attained and the saturating
        vertices span an affine subspace of dimension D - 1
    """
    if ineq.d > settings.MAX_FACET_D and not allow_large:
        raise ResourceGuardError(
            f"Facet check for d={ineq.d} exceeds MAX_FACET_D={settings.MAX_FACET_D}; "
            f"pass allow_large to override"
        )
    logger.info(f"Facet check for {ineq.label} (d={ineq.d}, outcomes={ineq.outcomes})")

    best = classical_max(ineq, threads=threads)
    strategies = strategy_array(ineq.outcomes)
    values = lhs_numerators(ineq, strategies)
    saturating = strategies[values == int(best.value * ineq.denominator)]

    dim = polytope_dim(ineq.outcomes)
    _, g = cg_functional(ineq)
    # saturating vertices lie on a hyperplane unless the functional is constant
    target = dim - 1 if g.any() else dim
    rank = affine_rank(cg_matrix(saturating, ineq.outcomes), target=target)

    is_valid = best.value <= ineq.bound
    is_attained = best.value == ineq.bound
    is_facet = is_valid and is_attained and rank.rank == dim - 1
    if rank.method == "modular" and rank.rank < target:
        logger.warning(
            f"Modular rank {rank.rank} for {ineq.label} is a lower bound on the affine rank"
        )

    report = TightnessReport(
        label=ineq.label,
        classical_max=str(best.value),
        bound=str(ineq.bound),
        is_valid=is_valid,
        is_attained=is_attained,
        saturating_count=len(saturating),
        affine_rank=rank.rank,
        polytope_dim=dim,
        is_facet=is_facet,
        rank_method=rank.method,
    )
    logger.info(
        f"{ineq.label}: max={best.value} bound={ineq.bound} saturating={len(saturating)} "
        f"rank={rank.rank}/{dim} facet={is_facet} [{rank.method}]"
    )
    return report


def polytope_self_test(d: int) -> Tuple[int, int]:
    """(affine rank of all vertices, D); equal when the CG embedding is sound"""
    strategies = strategy_array(d)
    dim = polytope_dim(d)
    rank = affine_rank(cg_matrix(strategies, d), target=dim)
    logger.info(f"Polytope self-test d={d}: rank {rank.rank} / D {dim} [{rank.method}]")
    return rank.rank, dim


def white_noise_lhs(ineq: BellInequality) -> float:
    return evaluate_lhs(ineq, ModularProbabilityTable.uniform(ineq.d))


def write_certificate(
    report: TightnessReport,
    ineq: BellInequality,
    path: Union[str, Path]
) -> Path:
    """Plain-text facet certificate: serialized inequality, then fixed-order fields"""
    path = Path(path)
    lines = [dump_inequality(ineq).rstrip("\n"), "---"]
    for field in (
        "classical_max", "bound", "is_valid", "is_attained", "saturating_count",
        "affine_rank", "polytope_dim", "is_facet", "rank_method",
    ):
        value = getattr(report, field)
        if isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{field}: {value}")
    lines.append(f"verdict: {'facet' if report.is_facet else 'not-facet'}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote certificate {path}")
    return path
