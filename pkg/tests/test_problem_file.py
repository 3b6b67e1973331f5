from pathlib import Path

import numpy as np
import pytest

from maslov_shoot.errors import (DimensionMismatch, NonDiagonalAsymptote, ParseError, ProblemFileError,
                                 UnknownIdentifier)
from maslov_shoot.families import sigmoid_family
from maslov_shoot.model import verify_conditions
from maslov_shoot.problem_file import dump_problem, load_problem, parse_sections

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

MINIMAL = """\
[problem]
n = 2
nu = 1
S = [[50, 0], [0, -50]]
S0 = [[50, 0], [0, -50]]
Sinf = [[50, 0], [0, -50]]
"""


def test_minimal_constant_file_verifies():
    P = load_problem(MINIMAL)
    assert P.n == 2 and P.sig.nu == 1
    assert np.array_equal(P.matrix(0.3, np.array([1.0, 2.0])), np.diag([50.0, -50.0]))
    assert verify_conditions(P).all_pass


def test_shipped_constant_file(tmp_path):
    P = load_problem(PROBLEMS / "constant.problem")
    assert P.name == "constant"
    assert verify_conditions(P).all_pass
    f = tmp_path / "c.problem"
    f.write_text(MINIMAL)
    assert load_problem(str(f)).n == 2


def test_dimension_mismatch():
    text = MINIMAL.replace("S = [[50, 0], [0, -50]]", "S = [[50, 0, 0], [0, -50, 0], [0, 0, 1]]")
    with pytest.raises(DimensionMismatch):
        load_problem(text)
    with pytest.raises(DimensionMismatch):
        load_problem(MINIMAL.replace("nu = 1", "nu = 3"))


def test_unknown_identifier_x3():
    text = MINIMAL.replace("S = [[50, 0]", 'S = [["5 + 40*tanh(x3^2)", 0]')
    with pytest.raises(UnknownIdentifier) as exc:
        load_problem(text)
    assert exc.value.name == "x3"


def test_parse_error_location():
    text = MINIMAL.replace("nu = 1", "nu 1")
    with pytest.raises(ParseError) as exc:
        load_problem(text)
    assert exc.value.line == 3 and exc.value.column == 1
    with pytest.raises(ParseError) as exc:
        load_problem("[problem]\nS = [[1, 0],\n     [0, 1]\n")
    assert exc.value.line == 2
    with pytest.raises(ParseError):
        load_problem("[nonsense]\nx = 1\n")
    with pytest.raises(ParseError):
        load_problem(MINIMAL.replace("nu = 1\n", ""))


def test_non_diagonal_asymptote():
    with pytest.raises(NonDiagonalAsymptote):
        load_problem(MINIMAL.replace("S0 = [[50, 0]", "S0 = [[50, 1]"))


def test_unknown_option_rejected():
    with pytest.raises(ParseError):
        load_problem(MINIMAL + "[options]\nbogus = 1\n")
    P = load_problem(MINIMAL + "[options]\ngrid = 65\nhmax = 12\n")
    assert P.options.grid == 65 and P.options.hmax == 12


def test_missing_file():
    with pytest.raises(ProblemFileError, match="not found"):
        load_problem("no_such_file.problem")


def test_comments_and_multiline_matrices():
    sec = parse_sections("# header\n[problem]\nS = [[1, 0],  # row one\n     [0, 2]]\n")
    assert sec["problem"]["S"] == [[1, 0], [0, 2]]


def test_round_trip_sigmoid():
    P = sigmoid_family()
    Q = load_problem(dump_problem(P))
    assert Q.name == P.name and Q.sig == P.sig
    x = np.array([0.7, -1.1])
    for t in (0.0, 0.5, 1.0):
        assert np.array_equal(P.matrix(t, x), Q.matrix(t, x))
    assert dump_problem(Q) == dump_problem(P)


@pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.problem")), ids=lambda p: p.stem)
def test_shipped_files_load(path):
    P = load_problem(path)
    assert load_problem(dump_problem(P)).n == P.n
