from fractions import Fraction

import numpy as np
import pytest

from models.errors import CatalogError
from models.inequality import BellInequality, CorrelationInequality
from services.catalog import catalog, catalog_entry, catalog_names, list_catalog

PROBABILITY_NAMES = [
    "mermin-prob", "qutrit", "quartit", "quartit-reformed", "quintit", "quartit-qubit", "quintit-qubit",
]
CORRELATION_NAMES = [
    "mermin-corr", "mermin-corr-alt", "corr-quartit-qubit",
    "corr-quartit-qubit-normalized", "corr-qutrit-qubit-normalized", "chsh",
]

# representatives (111), (112), (122), (222) of the party-symmetric entries
GOLDEN_ROWS = {
    "qutrit": ([-1, -1, 2], [1, -2, 1], [2, -1, -1], [-2, -2, 4]),
    "quartit": ([-5, 1, 3, 1], [3, -7, 3, 1], [3, 1, -5, 1], [-1, -3, -1, 5]),
    "quartit-reformed": ([-3, 0, 1, 0], [0, -5, 0, -1], [1, 0, -3, 0], [0, -1, 0, 3]),
    "quintit": ([-2, 1, 0, 0, 1], [1, 0, -2, 0, 1], [1, 0, 0, 1, -2], [0, -2, 0, 1, 1]),
    "quartit-qubit": ([3, 1, -5, 1], [3, 1, 3, -7], [-5, 1, 3, 1], [-1, 5, -1, -3]),
    "quintit-qubit": ([0, 1, -2, 1, 0], [0, 1, 1, 0, 0], [1, -2, 1, 0, 0], [1, 1, 0, -2, 0]),
}
SYMMETRIC_CLASSES = {
    0: [(1, 1, 1)],
    1: [(1, 1, 2), (1, 2, 1), (2, 1, 1)],
    2: [(1, 2, 2), (2, 1, 2), (2, 2, 1)],
    3: [(2, 2, 2)],
}
BOUNDS = {
    "mermin-prob": 2, "qutrit": 6, "quartit": 12, "quartit-reformed": 0,
    "quintit": 4, "quartit-qubit": 12, "quintit-qubit": 4,
    "mermin-corr": 2, "mermin-corr-alt": 2, "corr-quartit-qubit": 3,
    "corr-quartit-qubit-normalized": 1, "corr-qutrit-qubit-normalized": 1, "chsh": 2,
}


class TestTranscription:
    @pytest.mark.parametrize("name", sorted(GOLDEN_ROWS))
    def test_golden_rows(self, name):
        ineq = catalog(name)
        for cls, triples in SYMMETRIC_CLASSES.items():
            expected = [Fraction(c) for c in GOLDEN_ROWS[name][cls]]
            for triple in triples:
                assert list(ineq.row(triple)) == expected, (name, triple)

    @pytest.mark.parametrize("name", sorted(BOUNDS))
    def test_bounds(self, name):
        assert float(catalog(name).bound) == BOUNDS[name]

    def test_quartit_and_quintit_entries(self):
        assert catalog("quartit").coefficient(1, 1, 1, 0) == -5
        assert catalog("quintit").coefficient(2, 2, 2, 1) == -2

    def test_mermin_prob(self):
        ineq = catalog("mermin-prob")
        assert ineq.d == 2
        assert ineq.bound == 2
        nonzero = ineq.values[ineq.values != 0]
        assert set(np.abs(nonzero)) == {1.0}
        assert len(nonzero) == 8
        assert list(ineq.row((1, 1, 1))) == [0, 0]

    def test_qubit_reductions_have_binary_outcomes(self):
        assert catalog("quartit-qubit").outcomes == 2
        assert catalog("quintit-qubit").outcomes == 2
        assert catalog("quartit").outcomes == 4

    def test_correlation_terms(self):
        terms = catalog("corr-quartit-qubit").terms()
        assert terms["A1B1C1"] == -1
        assert terms["A2B2C2"] == -1
        assert terms["A1"] == 1
        assert "A2" not in terms
        assert len(terms) == 17

    def test_normalized_forms_are_scaled(self):
        assert catalog("corr-quartit-qubit-normalized").term("A1B1C1") == pytest.approx(-1 / 3)
        assert catalog("corr-qutrit-qubit-normalized").term("A2B2C2") == pytest.approx(0.5)

    def test_chsh_is_two_party(self):
        chsh = catalog("chsh")
        assert chsh.parties == "AB"
        assert not chsh.triple.any()


class TestRowSums:
    @pytest.mark.parametrize("name", ["mermin-prob", "qutrit", "quartit", "quintit", "quartit-qubit"])
    def test_rows_sum_to_zero(self, name):
        assert np.all(catalog(name).numerators.sum(axis=-1) == 0)

    def test_quintit_qubit_rows_do_not_all_sum_to_zero(self):
        sums = catalog("quintit-qubit").numerators.sum(axis=-1)
        assert sums[0, 0, 0] == 0
        assert sums[0, 0, 1] == 2
        assert sums[1, 1, 1] == 0


class TestLookup:
    def test_unknown_name_lists_valid_names(self):
        with pytest.raises(CatalogError) as info:
            catalog("sextit")
        assert "quartit" in str(info.value)
        assert isinstance(info.value, KeyError)

    def test_trivial_entries(self):
        ineq = catalog("trivial-d4")
        assert ineq.d == 4
        assert ineq.bound == 1
        assert ineq.coefficient(1, 1, 1, 0) == 1
        assert ineq.values.sum() == 1
        with pytest.raises(CatalogError):
            catalog("trivial-d9")

    def test_names(self):
        names = catalog_names(include_trivial=False)
        assert set(PROBABILITY_NAMES + CORRELATION_NAMES) == set(names)
        assert "trivial-d2" in catalog_names()

    @pytest.mark.parametrize("name", PROBABILITY_NAMES)
    def test_probability_types(self, name):
        assert isinstance(catalog(name), BellInequality)

    @pytest.mark.parametrize("name", CORRELATION_NAMES)
    def test_correlation_types(self, name):
        assert isinstance(catalog(name), CorrelationInequality)

    def test_fresh_instances(self):
        assert catalog("quartit") is not catalog("quartit")


class TestListing:
    def test_entry(self):
        entry = catalog_entry("quartit")
        assert entry.form == "probability"
        assert entry.d == 4
        assert entry.bound == "12"

    def test_filter_by_dimension(self):
        assert {e.name for e in list_catalog(d=5)} == {"quintit", "quintit-qubit"}

    def test_filter_by_form(self):
        entries = {e.name: e for e in list_catalog(form="correlation")}
        assert set(entries) == set(CORRELATION_NAMES)
        assert float(entries["corr-quartit-qubit"].bound) == 3

    def test_trivial_entries_not_listed(self):
        assert not any(e.name.startswith("trivial") for e in list_catalog())
