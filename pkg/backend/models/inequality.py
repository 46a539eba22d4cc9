"""
Inequality and behaviour value types

Probability-form inequalities are stored as an integer tensor of shape
(2, 2, 2, d) indexed [i-1, j-1, k-1, r]; settings are 1-based in the
public API and residues 0-based. Half-integer coefficients are held as
numerators over a denominator of 2.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import InconsistencyError, ParameterRangeError

PARTIES = "ABC"
PAIRS = ("AB", "AC", "BC")
SETTING_TRIPLES: Tuple[Tuple[int, int, int], ...] = tuple(product((1, 2), repeat=3))

Number = Union[int, Fraction]
Triple = Tuple[int, int, int]

NORMALIZATION_TOLERANCE = 1e-12
CORRELATION_TOLERANCE = 1e-12

_TERM_PATTERN = re.compile(r"([ABC])([12])")


def triple_index(triple: Triple) -> Tuple[int, int, int]:
    """Array index of a 1-based setting triple"""
    i, j, k = triple
    if not all(s in (1, 2) for s in (i, j, k)):
        raise ParameterRangeError(f"Setting indices must be 1 or 2, got {triple}")
    return i - 1, j - 1, k - 1


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        frac = Fraction(value).limit_denominator(2)
        if float(frac) != value:
            raise ParameterRangeError(f"Coefficient {value} is not a (half-)integer")
        return frac
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class BellInequality:
    """Bell inequality in modular probability form, sum f * P(a_i+b_j+c_k=r) <= bound"""

    d: int
    numerators: np.ndarray
    bound_numerator: int
    label: str = ""
    denominator: int = 1
    outcomes: Optional[int] = None

    def __post_init__(self):
        if self.d < 2:
            raise ParameterRangeError(f"d must be >= 2, got {self.d}")
        if self.denominator not in (1, 2):
            raise ParameterRangeError("Only integer and half-integer coefficients are supported")

        nums = np.array(self.numerators, dtype=np.int64, copy=True)
        if nums.shape != (2, 2, 2, self.d):
            raise ParameterRangeError(
                f"Coefficient tensor must have shape (2, 2, 2, {self.d}), got {nums.shape}"
            )

        outcomes = self.d if self.outcomes is None else int(self.outcomes)
        if not 2 <= outcomes <= self.d:
            raise ParameterRangeError(f"outcomes must lie in [2, {self.d}], got {outcomes}")

        bound_num = int(self.bound_numerator)
        denominator = self.denominator
        if denominator == 2 and not (nums % 2).any() and bound_num % 2 == 0:
            nums //= 2
            bound_num //= 2
            denominator = 1

        nums.setflags(write=False)
        object.__setattr__(self, "numerators", nums)
        object.__setattr__(self, "bound_numerator", bound_num)
        object.__setattr__(self, "denominator", denominator)
        object.__setattr__(self, "outcomes", outcomes)

    @classmethod
    def from_rows(
        cls,
        d: int,
        rows: Mapping[Triple, Sequence[Number]],
        bound: Number,
        label: str = "",
        outcomes: Optional[int] = None
    ) -> "BellInequality":
        """
        Build from per-triple coefficient rows

        Args:
            d: number of residues
            rows: (i, j, k) -> d coefficients; missing triples are zero rows
            bound: classical bound
            label: identifier
            outcomes: local outcome alphabet size (defaults to d)
        """
        fractions = np.zeros((2, 2, 2, d), dtype=object)
        fractions[...] = Fraction(0)
        for triple, row in rows.items():
            if len(row) != d:
                raise ParameterRangeError(f"Row {triple} has {len(row)} entries, expected {d}")
            fractions[triple_index(triple)] = [_as_fraction(c) for c in row]

        bound = _as_fraction(bound)
        denominator = 1
        if any(f.denominator != 1 for f in fractions.flat) or bound.denominator != 1:
            denominator = 2
        if any(f.denominator not in (1, 2) for f in fractions.flat) or bound.denominator not in (1, 2):
            raise ParameterRangeError("Coefficients must be integers or half-integers")

        nums = np.array([int(f * denominator) for f in fractions.flat], dtype=np.int64)
        return cls(
            d=d,
            numerators=nums.reshape(2, 2, 2, d),
            bound_numerator=int(bound * denominator),
            label=label,
            denominator=denominator,
            outcomes=outcomes,
        )

    @property
    def bound(self) -> Fraction:
        return Fraction(self.bound_numerator, self.denominator)

    @property
    def values(self) -> np.ndarray:
        """Coefficients as floats, shape (2, 2, 2, d)"""
        return self.numerators / self.denominator

    def coefficient(self, i: int, j: int, k: int, r: int) -> Fraction:
        if not 0 <= r < self.d:
            raise ParameterRangeError(f"Residue {r} outside 0..{self.d - 1}")
        return Fraction(int(self.numerators[triple_index((i, j, k)) + (r,)]), self.denominator)

    def row(self, triple: Triple) -> Tuple[Fraction, ...]:
        nums = self.numerators[triple_index(triple)]
        return tuple(Fraction(int(n), self.denominator) for n in nums)

    def rows(self) -> Iterator[Tuple[Triple, Tuple[Fraction, ...]]]:
        for triple in SETTING_TRIPLES:
            yield triple, self.row(triple)

    def same_coefficients(self, other: "BellInequality") -> bool:
        """Coefficient-identical (label ignored)"""
        return (
            self.d == other.d
            and self.outcomes == other.outcomes
            and self.denominator == other.denominator
            and self.bound_numerator == other.bound_numerator
            and np.array_equal(self.numerators, other.numerators)
        )

    def with_label(self, label: str) -> "BellInequality":
        return BellInequality(
            d=self.d,
            numerators=self.numerators,
            bound_numerator=self.bound_numerator,
            label=label,
            denominator=self.denominator,
            outcomes=self.outcomes,
        )

    def __repr__(self) -> str:
        return f"BellInequality(label={self.label!r}, d={self.d}, bound={self.bound})"


@dataclass(frozen=True, eq=False)
class ModularProbabilityTable:
    """P(a_i+b_j+c_k = r mod d) for all eight setting triples"""

    d: int
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True)
        if p.shape != (2, 2, 2, self.d):
            raise InconsistencyError(f"Table must have shape (2, 2, 2, {self.d}), got {p.shape}")
        if (p < -NORMALIZATION_TOLERANCE).any():
            raise InconsistencyError("Negative probability in modular table")
        sums = p.sum(axis=-1)
        if np.abs(sums - 1.0).max() > NORMALIZATION_TOLERANCE:
            raise InconsistencyError(
                f"Modular table rows do not sum to 1 (max deviation {np.abs(sums - 1.0).max():.3e})"
            )
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, d: int) -> "ModularProbabilityTable":
        return cls(d=d, p=np.full((2, 2, 2, d), 1.0 / d))

    @classmethod
    def from_rows(cls, d: int, rows: Mapping[Triple, Sequence[float]]) -> "ModularProbabilityTable":
        p = np.zeros((2, 2, 2, d))
        for triple in SETTING_TRIPLES:
            p[triple_index(triple)] = [float(x) for x in rows[triple]]
        return cls(d=d, p=p)

    def probability(self, i: int, j: int, k: int, r: int) -> float:
        return float(self.p[triple_index((i, j, k)) + (r,)])


def parse_term(term: str) -> Tuple[Tuple[str, int], ...]:
    """'A1B2C1' -> (('A', 1), ('B', 2), ('C', 1))"""
    parts = _TERM_PATTERN.findall(term)
    if "".join(p + s for p, s in parts) != term or not parts:
        raise ParameterRangeError(f"Malformed correlation term '{term}'")
    parties = [p for p, _ in parts]
    if parties != sorted(set(parties)):
        raise ParameterRangeError(f"Correlation term '{term}' must list distinct parties in order")
    return tuple((p, int(s)) for p, s in parts)


def _term_names() -> Iterator[Tuple[str, str, Tuple[int, ...]]]:
    """(name, kind, index) for every correlation term in canonical order"""
    for i, j, k in SETTING_TRIPLES:
        yield f"A{i}B{j}C{k}", "triple", (i - 1, j - 1, k - 1)
    for pair_index, pair in enumerate(PAIRS):
        for s, t in product((1, 2), repeat=2):
            yield f"{pair[0]}{s}{pair[1]}{t}", "pair", (pair_index, s - 1, t - 1)
    for party_index, party in enumerate(PARTIES):
        for s in (1, 2):
            yield f"{party}{s}", "single", (party_index, s - 1)


TERM_NAMES = tuple(name for name, _, _ in _term_names())


@dataclass(frozen=True, eq=False)
class _CorrelationTerms:
    triple: np.ndarray = field(default_factory=lambda: np.zeros((2, 2, 2)))
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((3, 2, 2)))
    singles: np.ndarray = field(default_factory=lambda: np.zeros((3, 2)))

    def _freeze_arrays(self):
        for name, shape in (("triple", (2, 2, 2)), ("pairs", (3, 2, 2)), ("singles", (3, 2))):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            if arr.shape != shape:
                raise ParameterRangeError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def term(self, name: str) -> float:
        for term_name, kind, index in _term_names():
            if term_name == name:
                return float(getattr(self, {"triple": "triple", "pair": "pairs", "single": "singles"}[kind])[index])
        raise ParameterRangeError(f"Unknown correlation term '{name}'")

    def as_vector(self) -> np.ndarray:
        """Flat vector in TERM_NAMES order"""
        return np.concatenate([self.triple.ravel(), self.pairs.ravel(), self.singles.ravel()])


@dataclass(frozen=True, eq=False)
class CorrelationInequality(_CorrelationTerms):
    """Linear inequality in correlation functions E(.) of +/-1 observables"""

    bound: float = 0.0
    label: str = ""
    parties: str = "ABC"

    def __post_init__(self):
        self._freeze_arrays()
        if self.parties not in ("ABC", "AB", "AC", "BC"):
            raise ParameterRangeError(f"Unsupported party set '{self.parties}'")
        if len(self.parties) == 3 and not self.triple.any():
            raise ParameterRangeError("Three-party correlation inequality needs a triple term")
        if len(self.parties) == 2 and not self.pairs[PAIRS.index(self.parties)].any():
            raise ParameterRangeError("Two-party correlation inequality needs a pair term")

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[str, float],
        bound: float,
        label: str = "",
        parties: Optional[str] = None,
        scale: float = 1.0
    ) -> "CorrelationInequality":
        """Build from {'A1B1C1': -1, 'A1B2': -1, 'A1': 1, ...}; coefficients multiplied by scale"""
        triple = np.zeros((2, 2, 2))
        pairs = np.zeros((3, 2, 2))
        singles = np.zeros((3, 2))
        used = set()
        for name, coeff in terms.items():
            parsed = parse_term(name)
            used.update(p for p, _ in parsed)
            value = scale * float(coeff)
            if len(parsed) == 3:
                triple[tuple(s - 1 for _, s in parsed)] += value
            elif len(parsed) == 2:
                pair = parsed[0][0] + parsed[1][0]
                pairs[PAIRS.index(pair), parsed[0][1] - 1, parsed[1][1] - 1] += value
            else:
                singles[PARTIES.index(parsed[0][0]), parsed[0][1] - 1] += value
        if parties is None:
            parties = "".join(p for p in PARTIES if p in used)
        return cls(triple=triple, pairs=pairs, singles=singles,
                   bound=float(bound), label=label, parties=parties)

    def terms(self) -> Dict[str, float]:
        """Nonzero coefficients keyed by term name, canonical order"""
        out = {}
        for name, value in zip(TERM_NAMES, self.as_vector()):
            if value != 0.0:
                out[name] = float(value)
        return out

    def __repr__(self) -> str:
        return f"CorrelationInequality(label={self.label!r}, parties={self.parties}, bound={self.bound})"


@dataclass(frozen=True, eq=False)
class CorrelationValues(_CorrelationTerms):
    """Expectation values E(A_iB_jC_k), E(X_iY_j), E(X_i)"""

    def __post_init__(self):
        self._freeze_arrays()
        for arr in (self.triple, self.pairs, self.singles):
            if (np.abs(arr) > 1.0 + CORRELATION_TOLERANCE).any():
                raise InconsistencyError("Correlation value outside [-1, 1]")

    @classmethod
    def constant(cls, value: float) -> "CorrelationValues":
        return cls(
            triple=np.full((2, 2, 2), value),
            pairs=np.full((3, 2, 2), value),
            singles=np.full((3, 2), value),
        )
