import json

import numpy as np
import pytest

from models.errors import FormatError
from models.quantum import PureState
from models.reports import RunManifest, SweepRow
from services.catalog import catalog
from services.optimizer import reference_settings_d4
from services.quantum_engine import ghz_closed_form_table, ghz_state, w_state
from services.serialization import (
    dump_inequality,
    dump_settings,
    dump_state,
    format_real,
    load_inequality,
    load_settings,
    load_state,
    load_table_csv,
    manifest_path,
    sweep_csv,
    table_csv,
    write_manifest,
)
from utils.plotting import plot_sweeps


QUARTIT_TEXT = """\
# comment lines are ignored
bell d=4 bound=12 label=hand written
111 1 3 3 1
112 -1 1 1 -1
121 -1 1 1 -1
122 1 -1 -3 3
211 -1 1 1 -1
212 1 -1 -3 3
221 1 -1 -3 3
222 -3 -1 1 3
"""


class TestInequalityText:
    @pytest.mark.parametrize("name", ["quartit", "quintit", "qutrit", "quartit-qubit", "mermin-prob"])
    def test_bell_round_trip(self, name):
        ineq = catalog(name)
        loaded = load_inequality(dump_inequality(ineq))
        assert loaded.same_coefficients(ineq)
        assert loaded.bound == ineq.bound
        assert loaded.label == ineq.label
        assert loaded.outcomes == ineq.outcomes

    @pytest.mark.parametrize("name", ["mermin-corr", "corr-quartit-qubit", "chsh"])
    def test_correlation_round_trip(self, name):
        cineq = catalog(name)
        loaded = load_inequality(dump_inequality(cineq))
        assert loaded.terms() == cineq.terms()
        assert loaded.bound == cineq.bound
        assert loaded.parties == cineq.parties

    def test_header_format(self):
        first = dump_inequality(catalog("quartit")).splitlines()[0]
        assert first == "bell d=4 bound=12 label=quartit"

    def test_outcomes_written_when_restricted(self):
        first = dump_inequality(catalog("quartit-qubit")).splitlines()[0]
        assert " outcomes=2 " in first

    def test_label_keeps_spaces(self):
        text = dump_inequality(catalog("quartit").with_label("my quartit copy"))
        assert load_inequality(text).label == "my quartit copy"

    def test_label_keeps_trailing_whitespace(self):
        text = dump_inequality(catalog("quartit").with_label("padded  "))
        assert load_inequality(text).label == "padded  "

    def test_parses_hand_written_record(self):
        ineq = load_inequality(QUARTIT_TEXT)
        assert ineq.d == 4
        assert ineq.bound == 12
        assert [int(c) for c in ineq.row((1, 1, 1))] == [1, 3, 3, 1]

    def test_half_integer_coefficients(self):
        text = "bell d=2 bound=3/2\n" + "\n".join(f"{i}{j}{k} 1/2 0" for i in (1, 2) for j in (1, 2) for k in (1, 2))
        ineq = load_inequality(text)
        assert ineq.denominator == 2
        assert float(ineq.bound) == 1.5


class TestMalformedInput:
    @pytest.mark.parametrize("text", [
        "",
        "# only a comment\n",
        "bel d=4 bound=12\n",
        "bell bound=12\n",
        "bell d=four bound=12\n",
        "bell d=4\n000 1 1 1 1\n",
        "\n".join(QUARTIT_TEXT.splitlines()[:-1]),
        QUARTIT_TEXT.replace("222 -3 -1 1 3", "222 -3 -1 1"),
        QUARTIT_TEXT.replace("222 -3 -1 1 3", "111 -3 -1 1 3"),
        QUARTIT_TEXT.replace("222", "232"),
        QUARTIT_TEXT.replace("222 -3", "222 x"),
        QUARTIT_TEXT.replace("222 -3", "222 1/0"),
        QUARTIT_TEXT.replace("222 -3", "222 1/3"),
        "corr bound=2\nA1B1C3:1\n",
        "corr bound=2\nA1B1C1 1\n",
        "corr bound=two\nA1B1C1:1\n",
    ])
    def test_inequality_errors(self, text):
        with pytest.raises(FormatError):
            load_inequality(text)

    @pytest.mark.parametrize("text", [
        "state d=2\n0 0 0 1.0\n",
        "state d=2\n0 0 2 1.0 0.0\n",
        "state d=2\n0 0 0 0.5 0.0\n",
        "vector d=2\n0 0 0 1.0 0.0\n",
    ])
    def test_state_errors(self, text):
        with pytest.raises(FormatError):
            load_state(text)

    def test_settings_missing_party(self):
        text = "\n".join(dump_settings(reference_settings_d4()).splitlines()[:-1])
        with pytest.raises(FormatError, match="C2"):
            load_settings(text)

    def test_settings_wrong_length(self):
        text = dump_settings(reference_settings_d4()).replace("A1 0.0", "A1")
        with pytest.raises(FormatError):
            load_settings(text)

    def test_table_missing_rows(self):
        text = "\n".join(table_csv(ghz_closed_form_table(4, reference_settings_d4())).splitlines()[:-1])
        with pytest.raises(FormatError):
            load_table_csv(text, 4)

    def test_table_wrong_columns(self):
        with pytest.raises(FormatError):
            load_table_csv("a,b,c\n1,2,3\n", 2)


class TestStatesAndSettings:
    @pytest.mark.parametrize("state", [w_state(), ghz_state(3)])
    def test_state_round_trip(self, state):
        loaded = load_state(dump_state(state))
        np.testing.assert_array_equal(loaded.amplitudes, state.amplitudes)
        assert loaded.label == state.label

    def test_state_label_keeps_trailing_whitespace(self):
        state = PureState(ghz_state(3).amplitudes, label="ghz 3 ")
        assert load_state(dump_state(state)).label == "ghz 3 "

    def test_settings_round_trip(self):
        settings = reference_settings_d4()
        loaded = load_settings(dump_settings(settings))
        np.testing.assert_array_equal(loaded.phases, settings.phases)


class TestCsv:
    def test_table_csv(self):
        table = ghz_closed_form_table(4, reference_settings_d4())
        text = table_csv(table)
        lines = text.splitlines()
        assert lines[0] == "i,j,k,r,p"
        assert len(lines) == 1 + 8 * 4
        np.testing.assert_allclose(load_table_csv(text, 4).p, table.p, atol=1e-11)

    def test_format_real(self):
        assert format_real(2.0) == "2"
        assert format_real(1 / 3) == "0.333333333333"

    def test_sweep_csv(self):
        rows = [
            SweepRow(index=0, inequality="mermin-corr", xi=0.0, value=2.0, bound=2.0, ratio=1.0, converged=True),
            SweepRow(index=1, xi=np.pi / 4, value=4.0, bound=2.0, ratio=2.0, converged=False),
        ]
        lines = sweep_csv(rows).splitlines()
        assert lines[0] == "inequality,index,xi,beta,value,bound,ratio,converged"
        assert lines[1] == "mermin-corr,0,0,,2,2,1,true"
        assert lines[2] == ",1,0.785398163397,,4,2,2,false"


class TestArtifacts:
    def test_manifest_path(self, tmp_path):
        assert manifest_path(tmp_path / "sweep.csv") == tmp_path / "sweep.csv.manifest.json"

    def test_write_manifest(self, tmp_path):
        manifest = RunManifest(command="ghz4-table", argv=["ghz4-table"], seed=1, version="1.0.0",
                               artifacts=["t.csv"])
        path = write_manifest(manifest, tmp_path / "t.csv")
        assert json.loads(path.read_text())["command"] == "ghz4-table"

    def test_plot_is_byte_deterministic(self, tmp_path):
        rows = [
            SweepRow(index=i, xi=x, value=v, bound=2.0, ratio=v / 2.0, converged=True)
            for i, (x, v) in enumerate([(0.0, 2.0), (0.4, 2.9), (0.8, 4.0)])
        ]
        first = plot_sweeps({"mermin": rows}, tmp_path / "a.svg", title="ghz family")
        second = plot_sweeps({"mermin": rows}, tmp_path / "b.svg", title="ghz family")
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().lstrip().startswith("<?xml")
