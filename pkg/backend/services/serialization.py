"""
Serialization - plain-text records for inequalities, states and settings,
CSV for tables and sweeps, JSON run manifests
"""

import csv
import io
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from models.errors import FormatError
from models.inequality import (
    PARTIES,
    SETTING_TRIPLES,
    TERM_NAMES,
    BellInequality,
    CorrelationInequality,
    ModularProbabilityTable,
    triple_index,
)
from models.quantum import PhaseSettings, PureState
from models.reports import RunManifest, SweepRow, TableComparisonRow

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("i", "j", "k", "r", "p")
SWEEP_COLUMNS = ("inequality", "index", "xi", "beta", "value", "bound", "ratio", "converged")


def format_real(value: float) -> str:
    """'.' decimal, 12 significant digits"""
    return f"{float(value):.12g}"


def _parse_header(line: str, kind: str) -> Dict[str, str]:
    """'<kind> key=value ... label=<rest of line>'"""
    if not line.startswith(kind + " ") and line != kind:
        raise FormatError(f"Expected a '{kind}' header, got '{line[:40]}'")
    body = line[len(kind):].lstrip()
    fields = {}
    label_pos = body.find("label=")
    if label_pos >= 0:
        fields["label"] = body[label_pos + len("label="):]
        body = body[:label_pos]
    for token in body.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"Malformed header field '{token}'")
        fields[key] = value
    return fields


def _lines(text: str) -> List[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def _fraction(token: str) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"Not a rational number: '{token}'") from e


def _real(token: str) -> float:
    try:
        return float(token)
    except ValueError as e:
        raise FormatError(f"Not a real number: '{token}'") from e


def _integer(fields: Dict[str, str], key: str) -> int:
    if key not in fields:
        raise FormatError(f"Header is missing '{key}'")
    try:
        return int(fields[key])
    except ValueError as e:
        raise FormatError(f"'{key}' must be an integer, got '{fields[key]}'") from e


def dump_inequality(ineq: Union[BellInequality, CorrelationInequality]) -> str:
    if isinstance(ineq, CorrelationInequality):
        lines = [f"corr bound={ineq.bound!r} parties={ineq.parties} label={ineq.label}"]
        lines.extend(f"{name}:{value!r}" for name, value in ineq.terms().items())
        return "\n".join(lines) + "\n"

    header = f"bell d={ineq.d} bound={ineq.bound}"
    if ineq.outcomes != ineq.d:
        header += f" outcomes={ineq.outcomes}"
    lines = [f"{header} label={ineq.label}"]
    for triple, row in ineq.rows():
        lines.append("".join(map(str, triple)) + " " + " ".join(str(c) for c in row))
    return "\n".join(lines) + "\n"


def load_inequality(text: str) -> Union[BellInequality, CorrelationInequality]:
    lines = _lines(text)
    if not lines:
        raise FormatError("Empty inequality record")
    if lines[0].startswith("corr"):
        return _load_correlation(lines)

    fields = _parse_header(lines[0], "bell")
    d = _integer(fields, "d")
    if "bound" not in fields:
        raise FormatError("Header is missing 'bound'")
    outcomes = _integer(fields, "outcomes") if "outcomes" in fields else None

    rows = {}
    for line in lines[1:]:
        parts = line.split()
        key = parts[0]
        if len(key) != 3 or not key.isdigit():
            raise FormatError(f"Bad setting triple '{key}'")
        triple = tuple(int(c) for c in key)
        try:
            triple_index(triple)
        except ValueError as e:
            raise FormatError(str(e)) from e
        if triple in rows:
            raise FormatError(f"Duplicate row for {key}")
        if len(parts) - 1 != d:
            raise FormatError(f"Row {key} has {len(parts) - 1} coefficients, expected {d}")
        rows[triple] = [_fraction(t) for t in parts[1:]]
    if len(rows) != len(SETTING_TRIPLES):
        raise FormatError(f"Expected 8 setting-triple rows, got {len(rows)}")

    try:
        return BellInequality.from_rows(
            d, rows, _fraction(fields["bound"]), label=fields.get("label", ""), outcomes=outcomes
        )
    except ValueError as e:
        raise FormatError(f"Invalid inequality: {e}") from e


def _load_correlation(lines: List[str]) -> CorrelationInequality:
    fields = _parse_header(lines[0], "corr")
    if "bound" not in fields:
        raise FormatError("Header is missing 'bound'")
    terms = {}
    for line in lines[1:]:
        name, sep, value = line.partition(":")
        name = name.strip()
        if not sep or name not in TERM_NAMES:
            raise FormatError(f"Bad correlation term line '{line}'")
        terms[name] = _real(value.strip())
    try:
        return CorrelationInequality.from_terms(
            terms,
            _real(fields["bound"]),
            label=fields.get("label", ""),
            parties=fields.get("parties"),
        )
    except ValueError as e:
        raise FormatError(f"Invalid correlation inequality: {e}") from e


def dump_state(state: PureState) -> str:
    lines = [f"state d={state.d} label={state.label}"]
    for a, b, c in zip(*np.nonzero(state.amplitudes)):
        amp = state.amplitudes[a, b, c]
        lines.append(f"{a} {b} {c} {float(amp.real)!r} {float(amp.imag)!r}")
    return "\n".join(lines) + "\n"


def load_state(text: str) -> PureState:
    lines = _lines(text)
    if not lines:
        raise FormatError("Empty state record")
    fields = _parse_header(lines[0], "state")
    d = _integer(fields, "d")
    amps = np.zeros((d, d, d), dtype=complex)
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"State line needs 'a b c re im', got '{line}'")
        try:
            a, b, c = (int(x) for x in parts[:3])
        except ValueError as e:
            raise FormatError(f"Bad basis index in '{line}'") from e
        if not all(0 <= x < d for x in (a, b, c)):
            raise FormatError(f"Basis index out of range in '{line}'")
        amps[a, b, c] = complex(_real(parts[3]), _real(parts[4]))
    try:
        return PureState(amps, label=fields.get("label", ""))
    except ValueError as e:
        raise FormatError(f"Invalid state: {e}") from e


def dump_settings(phase_settings: PhaseSettings) -> str:
    lines = [f"settings d={phase_settings.d}"]
    for name, vector in phase_settings.as_mapping().items():
        lines.append(name + " " + " ".join(repr(x) for x in vector))
    return "\n".join(lines) + "\n"


def load_settings(text: str) -> PhaseSettings:
    lines = _lines(text)
    if not lines:
        raise FormatError("Empty settings record")
    fields = _parse_header(lines[0], "settings")
    d = _integer(fields, "d")
    mapping = {}
    for line in lines[1:]:
        parts = line.split()
        name = parts[0]
        if len(name) != 2 or name[0] not in PARTIES or name[1] not in "12":
            raise FormatError(f"Bad settings key '{name}'")
        if len(parts) - 1 != d:
            raise FormatError(f"{name} has {len(parts) - 1} phases, expected {d}")
        mapping[name] = [_real(t) for t in parts[1:]]
    missing = [f"{p}{s}" for p in PARTIES for s in (1, 2) if f"{p}{s}" not in mapping]
    if missing:
        raise FormatError(f"Settings record is missing {', '.join(missing)}")
    return PhaseSettings.from_mapping(mapping)


def table_csv(table: ModularProbabilityTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for i, j, k in SETTING_TRIPLES:
        for r in range(table.d):
            writer.writerow([i, j, k, r, format_real(table.probability(i, j, k, r))])
    return buffer.getvalue()


def load_table_csv(text: str, d: int) -> ModularProbabilityTable:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TABLE_COLUMNS:
        raise FormatError(f"Table CSV must have columns {','.join(TABLE_COLUMNS)}")
    p = np.full((2, 2, 2, d), np.nan)
    for row in reader:
        try:
            i, j, k, r = (int(row[c]) for c in TABLE_COLUMNS[:4])
            p[triple_index((i, j, k)) + (r,)] = float(row["p"])
        except (ValueError, IndexError) as e:
            raise FormatError(f"Bad table row {row}") from e
    if np.isnan(p).any():
        raise FormatError("Table CSV does not cover every (i, j, k, r)")
    try:
        return ModularProbabilityTable(d=d, p=p)
    except ValueError as e:
        raise FormatError(f"Invalid probability table: {e}") from e


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([
            row.inequality,
            row.index,
            "" if row.xi is None else format_real(row.xi),
            "" if row.beta is None else format_real(row.beta),
            format_real(row.value),
            format_real(row.bound),
            format_real(row.ratio),
            str(row.converged).lower(),
        ])
    return buffer.getvalue()


def comparison_csv(rows: Iterable[TableComparisonRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("i", "j", "k", "r", "computed", "reference", "delta"))
    for row in rows:
        i, j, k = row.triple
        writer.writerow([i, j, k, row.r, format_real(row.computed), row.reference, format_real(row.delta)])
    return buffer.getvalue()


def manifest_path(artifact: Union[str, Path]) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + ".manifest.json")


def write_manifest(manifest: RunManifest, artifact: Union[str, Path]) -> Path:
    path = manifest_path(artifact)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Wrote manifest {path}")
    return path
