from fractions import Fraction
from itertools import permutations, product

import numpy as np
import pytest
from numpy.testing import assert_allclose

from models.errors import DimensionMismatchError, InconsistencyError, ParameterRangeError
from models.inequality import PAIRS, SETTING_TRIPLES, BellInequality, ModularProbabilityTable
from services.catalog import catalog
from services.inequality_core import (
    correlations_of_assignment,
    evaluate_correlation,
    evaluate_lhs,
    expectations_from_joint,
    normalized_coefficients,
    permute_parties,
    prob_corr_equivalence,
    reform_lhs,
    restrict_party_deterministic,
    restrict_with_constant,
    shift_outcomes,
    strategy_joint,
    table_from_joint,
)
from services.local_polytope import classical_max, strategy_table

PROBABILITY_NAMES = ["mermin-prob", "qutrit", "quartit", "quartit-reformed", "quintit", "quartit-qubit", "quintit-qubit"]

TABLE_D4 = {
    (1, 1, 1): [0, 1 / 6, 2 / 3, 1 / 6],
    (1, 1, 2): [1 / 2, 0, 1 / 2, 0],
    (1, 2, 1): [1 / 2, 0, 1 / 2, 0],
    (2, 1, 1): [1 / 2, 0, 1 / 2, 0],
    (1, 2, 2): [2 / 3, 1 / 6, 0, 1 / 6],
    (2, 1, 2): [2 / 3, 1 / 6, 0, 1 / 6],
    (2, 2, 1): [2 / 3, 1 / 6, 0, 1 / 6],
    (2, 2, 2): [1 / 18, 0, 1 / 18, 8 / 9],
}


class TestEvaluate:
    def test_quartit_on_reference_table(self, quartit):
        table = ModularProbabilityTable.from_rows(4, TABLE_D4)
        assert evaluate_lhs(quartit, table) == pytest.approx(68 / 3, abs=1e-9)

    def test_quartit_on_uniform(self, quartit):
        assert evaluate_lhs(quartit, ModularProbabilityTable.uniform(4)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("name", ["mermin-prob", "qutrit", "quartit", "quartit-reformed", "quintit"])
    def test_white_noise_gives_zero(self, name):
        ineq = catalog(name)
        assert evaluate_lhs(ineq, ModularProbabilityTable.uniform(ineq.d)) == pytest.approx(0.0, abs=1e-12)

    def test_all_zero_strategy_sums_residue_zero(self, quartit):
        value = evaluate_lhs(quartit, strategy_table((0,) * 6, 4))
        assert value == float(quartit.numerators[..., 0].sum()) == 12.0

    def test_saturating_strategy(self, quartit):
        strategy = (0, 1, 0, 1, 2, 3)
        assert evaluate_lhs(quartit, strategy_table(strategy, 4)) == 12.0
        assert evaluate_lhs(catalog("quartit-reformed"), strategy_table(strategy, 4)) == 0.0

    def test_linearity(self, quartit, rng):
        p = rng.dirichlet(np.ones(4), size=(2, 2, 2))
        q = rng.dirichlet(np.ones(4), size=(2, 2, 2))
        t = 0.3
        mixed = ModularProbabilityTable(d=4, p=t * p + (1 - t) * q)
        expected = t * evaluate_lhs(quartit, ModularProbabilityTable(d=4, p=p)) \
            + (1 - t) * evaluate_lhs(quartit, ModularProbabilityTable(d=4, p=q))
        assert evaluate_lhs(quartit, mixed) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self, quartit):
        with pytest.raises(DimensionMismatchError):
            evaluate_lhs(quartit, ModularProbabilityTable.uniform(3))

    def test_table_validation(self):
        with pytest.raises(InconsistencyError):
            ModularProbabilityTable(d=2, p=np.full((2, 2, 2, 2), 0.6))


class TestSymmetries:
    def test_shift_of_quartit_is_quartit_qubit(self, quartit):
        shifted = shift_outcomes(quartit, 2)
        assert np.array_equal(shifted.numerators, catalog("quartit-qubit").numerators)

    def test_shift_range(self, quartit):
        with pytest.raises(ParameterRangeError):
            shift_outcomes(quartit, 4)
        with pytest.raises(ParameterRangeError):
            shift_outcomes(quartit, -1)

    def test_shift_zero_is_identity(self, quartit):
        assert shift_outcomes(quartit, 0).same_coefficients(quartit)

    @pytest.mark.parametrize("name", ["qutrit", "quartit", "mermin-prob"])
    def test_shift_preserves_classical_max(self, name):
        ineq = catalog(name)
        best = classical_max(ineq).value
        for m in range(ineq.d):
            assert classical_max(shift_outcomes(ineq, m)).value == best

    @pytest.mark.parametrize("name", PROBABILITY_NAMES + ["trivial-d3"])
    def test_party_permutation_invariance(self, name):
        ineq = catalog(name)
        for sigma in permutations("ABC"):
            assert permute_parties(ineq, "".join(sigma)).same_coefficients(ineq)

    def test_permutation_moves_settings(self):
        ineq = BellInequality.from_rows(2, {(1, 1, 2): [1, 0]}, 1)
        swapped = permute_parties(ineq, "CBA")
        assert swapped.coefficient(2, 1, 1, 0) == 1
        assert swapped.coefficient(1, 1, 2, 0) == 0
        with pytest.raises(ParameterRangeError):
            permute_parties(ineq, "AAB")

    @pytest.mark.parametrize("name", PROBABILITY_NAMES)
    def test_normalized_coefficients_in_range(self, name):
        normalized = normalized_coefficients(catalog(name))
        assert not normalized.out_of_range
        assert np.abs(normalized.values).max() <= 1.0


class TestReform:
    DELTAS = {"111": 1, "112": 3, "121": 3, "211": 3, "122": 1, "212": 1, "221": 1, "222": -1}

    def test_quartit_reforms_to_reformed_entry(self, quartit):
        reformed = reform_lhs(quartit, self.DELTAS, scale=2)
        target = catalog("quartit-reformed")
        assert np.array_equal(reformed.values, target.values)
        assert reformed.bound == 0
        assert reformed.coefficient(1, 1, 1, 0) == -3

    def test_classical_max_transforms(self, quartit):
        reformed = reform_lhs(quartit, self.DELTAS, scale=2)
        assert classical_max(reformed).value == (classical_max(quartit).value - 12) / 2

    def test_tuple_keys(self, quartit):
        reformed = reform_lhs(quartit, {(1, 1, 1): 1})
        assert reformed.coefficient(1, 1, 1, 0) == -6
        assert reformed.bound == 11

    def test_half_integer_results(self):
        ineq = BellInequality.from_rows(2, {(1, 1, 1): [1, 0]}, 1)
        reformed = reform_lhs(ineq, {}, scale=2)
        assert reformed.coefficient(1, 1, 1, 0) == Fraction(1, 2)
        assert reformed.bound == Fraction(1, 2)

    def test_invalid(self, quartit):
        with pytest.raises(ParameterRangeError):
            reform_lhs(quartit, {"113": 1})
        with pytest.raises(ParameterRangeError):
            reform_lhs(quartit, {}, scale=0)


class TestCorrelations:
    def test_expectations_of_deterministic_strategy(self):
        # outcome 0 -> +1, outcome 1 -> -1
        joint = strategy_joint((0, 1, 0, 0, 1, 1))
        vals = expectations_from_joint(joint)
        expected = correlations_of_assignment((1, -1, 1, 1, -1, -1))
        assert_allclose(vals.as_vector(), expected.as_vector())

    def test_mermin_alt_on_all_plus(self):
        vals = correlations_of_assignment((1,) * 6)
        assert evaluate_correlation(catalog("mermin-corr-alt"), vals) == 2.0

    def test_signalling_joint_is_rejected(self):
        joint = strategy_joint((0,) * 6)
        # A's outcome now depends on B's setting
        joint[0, 1, :, :, :, :] = strategy_joint((1, 0, 0, 0, 0, 0))[0, 1]
        with pytest.raises(InconsistencyError):
            expectations_from_joint(joint)

    def test_unnormalized_joint_is_rejected(self):
        with pytest.raises(InconsistencyError):
            expectations_from_joint(np.zeros((2,) * 6))

    def test_needs_binary_outcomes(self):
        with pytest.raises(DimensionMismatchError):
            expectations_from_joint(strategy_joint((0,) * 6), d=3)

    def test_modular_table_of_binary_joint(self):
        table = table_from_joint(strategy_joint((1, 1, 1, 1, 1, 1)), 4)
        for triple in SETTING_TRIPLES:
            assert table.probability(*triple, 3) == 1.0


class TestEquivalence:
    @pytest.mark.parametrize("pname, cname, scale, offset", [
        ("quartit-qubit", "corr-quartit-qubit", 2.0, 6.0),
        ("quintit-qubit", "mermin-corr-alt", 1.25, 1.5),
        ("mermin-prob", "mermin-corr", 1.0, 0.0),
    ])
    def test_reductions(self, pname, cname, scale, offset):
        result = prob_corr_equivalence(catalog(pname), catalog(cname))
        assert result.equivalent
        assert result.scale == pytest.approx(scale, abs=1e-10)
        assert result.offset == pytest.approx(offset, abs=1e-10)
        assert result.max_discrepancy <= 1e-10
        assert result.checked_behaviours == 64 + 32

    def test_exact_on_binary_strategies(self):
        pineq, cineq = catalog("quartit-qubit"), catalog("corr-quartit-qubit")
        for strategy in product((0, 1), repeat=6):
            signs = tuple(1 - 2 * x for x in strategy)
            prob = evaluate_lhs(pineq, strategy_table(strategy, 4))
            corr = evaluate_correlation(cineq, correlations_of_assignment(signs))
            assert prob == 2 * corr + 6

    def test_quartit_qubit_is_not_chsh(self):
        result = prob_corr_equivalence(catalog("quartit-qubit"), catalog("chsh"))
        assert not result.equivalent
        assert result.witness is not None
        assert result.witness_description


class TestRestriction:
    def test_chsh_from_three_qubit_inequality(self):
        restricted = restrict_with_constant(catalog("corr-quartit-qubit"), "C", (-1, 1))
        ineq = restricted.inequality
        assert restricted.constant == -1.0
        assert ineq.bound == 4.0
        assert ineq.parties == "AB"
        assert_allclose(ineq.pairs[PAIRS.index("AB")], [[2, -2], [-2, -2]])
        assert not ineq.singles.any()
        assert not ineq.triple.any()

    def test_restriction_label(self):
        ineq = restrict_party_deterministic(catalog("corr-quartit-qubit"), "C", (-1, 1))
        assert ineq.label == "corr-quartit-qubit|C=-+"

    def test_restriction_matches_substitution(self, rng):
        cineq = catalog("corr-quartit-qubit")
        restricted = restrict_with_constant(cineq, "A", (1, -1))
        for signs in product((1, -1), repeat=4):
            full = correlations_of_assignment((1, -1) + signs)
            reduced = correlations_of_assignment((1, 1) + signs)
            # restricted LHS + constant equals the original LHS at the fixed values
            lhs = evaluate_correlation(restricted.inequality, reduced) + restricted.constant
            assert lhs == pytest.approx(evaluate_correlation(cineq, full), abs=1e-12)

    def test_invalid_values(self):
        with pytest.raises(ParameterRangeError):
            restrict_party_deterministic(catalog("corr-quartit-qubit"), "C", (0, 1))
        with pytest.raises(ParameterRangeError):
            restrict_party_deterministic(catalog("chsh"), "C", (1, 1))
