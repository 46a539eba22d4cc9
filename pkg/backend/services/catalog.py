"""
Catalog Service - Named Bell inequalities for three parties

Probability forms are transcribed row by row as (setting triple) -> coefficients
for residues r = 0..d-1. Party-symmetric rows are expanded from one
representative triple.
"""

import logging
import re
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

from models.errors import CatalogError
from models.inequality import BellInequality, CorrelationInequality
from models.reports import CatalogEntry

logger = logging.getLogger(__name__)

Inequality = Union[BellInequality, CorrelationInequality]

_TRIVIAL_PATTERN = re.compile(r"^trivial-d(\d+)$")
TRIVIAL_RANGE = range(2, 9)


def _symmetric_rows(
    r111: Sequence[int],
    r112: Sequence[int],
    r122: Sequence[int],
    r222: Sequence[int]
) -> Dict[tuple, Sequence[int]]:
    """Expand rows of a party-symmetric inequality from four representatives"""
    return {
        (1, 1, 1): r111,
        (1, 1, 2): r112, (1, 2, 1): r112, (2, 1, 1): r112,
        (1, 2, 2): r122, (2, 1, 2): r122, (2, 2, 1): r122,
        (2, 2, 2): r222,
    }


def _mermin_prob() -> BellInequality:
    rows = {
        (1, 1, 2): [1, -1], (1, 2, 1): [1, -1], (2, 1, 1): [1, -1],
        (2, 2, 2): [-1, 1],
    }
    return BellInequality.from_rows(2, rows, 2, label="mermin-prob")


def _qutrit() -> BellInequality:
    rows = _symmetric_rows([-1, -1, 2], [1, -2, 1], [2, -1, -1], [-2, -2, 4])
    return BellInequality.from_rows(3, rows, 6, label="qutrit")


def _quartit() -> BellInequality:
    rows = _symmetric_rows([-5, 1, 3, 1], [3, -7, 3, 1], [3, 1, -5, 1], [-1, -3, -1, 5])
    return BellInequality.from_rows(4, rows, 12, label="quartit")


def _quartit_reformed() -> BellInequality:
    rows = _symmetric_rows([-3, 0, 1, 0], [0, -5, 0, -1], [1, 0, -3, 0], [0, -1, 0, 3])
    return BellInequality.from_rows(4, rows, 0, label="quartit-reformed")


def _quintit() -> BellInequality:
    rows = _symmetric_rows(
        [-2, 1, 0, 0, 1], [1, 0, -2, 0, 1], [1, 0, 0, 1, -2], [0, -2, 0, 1, 1]
    )
    return BellInequality.from_rows(5, rows, 4, label="quintit")


def _quartit_qubit() -> BellInequality:
    rows = _symmetric_rows([3, 1, -5, 1], [3, 1, 3, -7], [-5, 1, 3, 1], [-1, 5, -1, -3])
    return BellInequality.from_rows(4, rows, 12, label="quartit-qubit", outcomes=2)


def _quintit_qubit() -> BellInequality:
    rows = _symmetric_rows(
        [0, 1, -2, 1, 0], [0, 1, 1, 0, 0], [1, -2, 1, 0, 0], [1, 1, 0, -2, 0]
    )
    return BellInequality.from_rows(5, rows, 4, label="quintit-qubit", outcomes=2)


_QUARTIT_QUBIT_TERMS = {
    "A1B1C1": -1, "A1B1C2": 1, "A1B2C1": 1, "A2B1C1": 1, "A2B2C2": -1,
    "A1B2": -1, "A2B1": -1, "A2B2": -1,
    "A1C2": -1, "A2C1": -1, "A2C2": -1,
    "B1C2": -1, "B2C1": -1, "B2C2": -1,
    "A1": 1, "B1": 1, "C1": 1,
}

_QUTRIT_QUBIT_TERMS = {
    "A1B1C1": 1, "A1B2C2": -1, "A2B1C2": -1, "A2B2C1": -1, "A2B2C2": 2,
    "A1B1": -1, "A1B2": -1, "A2B1": -1, "A2B2": -1,
    "A1C1": 1, "A1C2": 1, "A2C1": 1, "A2C2": 1,
    "B1C1": 1, "B1C2": 1, "B2C1": 1, "B2C2": 1,
}


def _mermin_corr() -> CorrelationInequality:
    terms = {"A1B1C2": 1, "A1B2C1": 1, "A2B1C1": 1, "A2B2C2": -1}
    return CorrelationInequality.from_terms(terms, 2, label="mermin-corr")


def _mermin_corr_alt() -> CorrelationInequality:
    terms = {"A1B1C1": -1, "A1B2C2": 1, "A2B1C2": 1, "A2B2C1": 1}
    return CorrelationInequality.from_terms(terms, 2, label="mermin-corr-alt")


def _corr_quartit_qubit() -> CorrelationInequality:
    return CorrelationInequality.from_terms(_QUARTIT_QUBIT_TERMS, 3, label="corr-quartit-qubit")


def _corr_quartit_qubit_normalized() -> CorrelationInequality:
    return CorrelationInequality.from_terms(
        _QUARTIT_QUBIT_TERMS, 1, label="corr-quartit-qubit-normalized", scale=1 / 3
    )


def _corr_qutrit_qubit_normalized() -> CorrelationInequality:
    return CorrelationInequality.from_terms(
        _QUTRIT_QUBIT_TERMS, 1, label="corr-qutrit-qubit-normalized", scale=0.25
    )


def _chsh() -> CorrelationInequality:
    terms = {"A1B1": 1, "A1B2": 1, "A2B1": 1, "A2B2": -1}
    return CorrelationInequality.from_terms(terms, 2, label="chsh", parties="AB")


def trivial_inequality(d: int) -> BellInequality:
    """P(a1+b1+c1 = 0) <= 1"""
    row = [1] + [0] * (d - 1)
    return BellInequality.from_rows(d, {(1, 1, 1): row}, 1, label=f"trivial-d{d}")


_BUILDERS: Mapping[str, Callable[[], Inequality]] = {
    "mermin-corr": _mermin_corr,
    "mermin-prob": _mermin_prob,
    "qutrit": _qutrit,
    "quartit": _quartit,
    "quartit-reformed": _quartit_reformed,
    "quintit": _quintit,
    "quartit-qubit": _quartit_qubit,
    "corr-quartit-qubit": _corr_quartit_qubit,
    "corr-qutrit-qubit-normalized": _corr_qutrit_qubit_normalized,
    "corr-quartit-qubit-normalized": _corr_quartit_qubit_normalized,
    "quintit-qubit": _quintit_qubit,
    "mermin-corr-alt": _mermin_corr_alt,
    "chsh": _chsh,
}


def catalog_names(include_trivial: bool = True) -> List[str]:
    names = list(_BUILDERS)
    if include_trivial:
        names.extend(f"trivial-d{d}" for d in TRIVIAL_RANGE)
    return names


def catalog(name: str) -> Inequality:
    """
    Look up a named inequality

    Args:
        name: catalog identifier, e.g. "quartit" or "trivial-d4"

    Returns:
        A fresh BellInequality or CorrelationInequality

    Raises:
        CatalogError: unknown identifier
    """
    builder = _BUILDERS.get(name)
    if builder is not None:
        return builder()

    match = _TRIVIAL_PATTERN.match(name)
    if match and int(match.group(1)) in TRIVIAL_RANGE:
        return trivial_inequality(int(match.group(1)))

    logger.debug(f"Catalog miss: {name}")
    raise CatalogError(name, catalog_names())


def catalog_entry(name: str) -> CatalogEntry:
    ineq = catalog(name)
    if isinstance(ineq, BellInequality):
        return CatalogEntry(
            name=name,
            form="probability",
            d=ineq.d,
            outcomes=ineq.outcomes,
            bound=str(ineq.bound),
            label=ineq.label,
        )
    return CatalogEntry(
        name=name,
        form="correlation",
        outcomes=2,
        bound=repr(ineq.bound),
        label=ineq.label,
    )


def list_catalog(form: Optional[str] = None, d: Optional[int] = None) -> List[CatalogEntry]:
    """Catalog entries filtered by form and dimension (trivial entries excluded)"""
    entries = [catalog_entry(name) for name in catalog_names(include_trivial=False)]
    if form is not None:
        entries = [e for e in entries if e.form == form]
    if d is not None:
        entries = [e for e in entries if e.d == d]
    return entries
