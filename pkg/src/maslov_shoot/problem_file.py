"""Reader and writer for problem files.

A problem file has three sections. Values are Python literals; matrix entries
are numbers or expression strings and may span several lines::

    [meta]
    name = "example"

    [problem]
    n = 2
    nu = 1
    S = [["5 + 225*tanh(x1^2)", "0"],
         ["0", "-50 + 55*tanh(x2^2)"]]
    S0 = [[5, 0], [0, -50]]
    Sinf = [[230, 0], [0, 5]]

    [options]
    grid = 129
    hmax = 32
"""
from __future__ import annotations

import ast
from pathlib import Path
from typing import Dict, Union

from .errors import DimensionMismatch, NonDiagonalAsymptote, ParseError, ProblemFileError
from .expr import Expression
from .model import NonlinearProblem, ProblemOptions

SECTIONS = ("meta", "problem", "options")
REQUIRED = ("n", "nu", "S", "S0", "Sinf")


def _strip_comment(line: str) -> str:
    quote = None
    for k, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:k]
    return line


def _bracket_depth(text: str) -> int:
    depth = 0
    quote = None
    for ch in text:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
    return depth


def parse_sections(text: str) -> Dict[str, dict]:
    """Split the text into sections of literal values.

    Raises
    ------
    ParseError
        With 1-based line and column of the offending token.
    """
    out: Dict[str, dict] = {}
    section = None
    lines = text.splitlines()
    k = 0
    while k < len(lines):
        raw = _strip_comment(lines[k])
        lineno = k + 1
        k += 1
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", lineno, len(raw) + 1)
            name = stripped[1:-1].strip()
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno, raw.index("[") + 1)
            section = out.setdefault(name, {})
            continue
        if "=" not in raw:
            raise ParseError("expected 'key = value'", lineno, len(raw) - len(raw.lstrip()) + 1)
        if section is None:
            raise ParseError("key outside of a section", lineno, 1)
        key, value = raw.split("=", 1)
        key = key.strip()
        if not key.isidentifier():
            raise ParseError(f"invalid key {key!r}", lineno, 1)
        value_col = raw.index("=") + 2 + (len(value) - len(value.lstrip()))
        start_line = lineno
        while _bracket_depth(value) > 0 and k < len(lines):
            value += "\n" + _strip_comment(lines[k])
            k += 1
        if _bracket_depth(value) != 0:
            raise ParseError("unbalanced brackets", start_line, value_col)
        try:
            section[key] = ast.literal_eval(value.strip())
        except (ValueError, SyntaxError) as exc:
            line = start_line + (getattr(exc, "lineno", 1) or 1) - 1
            col = getattr(exc, "offset", None)
            col = (value_col + (col or 1) - 1) if line == start_line else (col or 1)
            raise ParseError(f"invalid value for {key!r}", line, col) from None
    return out


def _matrix(value, n: int, name: str):
    if not isinstance(value, (list, tuple)) or len(value) != n or \
            any(not isinstance(r, (list, tuple)) or len(r) != n for r in value):
        raise DimensionMismatch(f"{name} must be a {n}x{n} matrix")
    for r in value:
        for e in r:
            if not isinstance(e, (int, float, str)) or isinstance(e, bool):
                raise ParseError(f"entries of {name} must be numbers or expression strings")
    return [list(r) for r in value]


def _check_diagonal(M, name: str):
    for i, r in enumerate(M):
        for j, e in enumerate(r):
            if i == j:
                continue
            ex = Expression.compile(e, 0)
            if not (ex.is_constant and ex(0.0, ()) == 0.0):
                raise NonDiagonalAsymptote(f"{name}[{i + 1}][{j + 1}] must vanish")


def problem_from_sections(sec: Dict[str, dict]) -> NonlinearProblem:
    prob = sec.get("problem")
    if prob is None:
        raise ParseError("missing [problem] section")
    for key in REQUIRED:
        if key not in prob:
            raise ParseError(f"missing key {key!r} in [problem]")
    n, nu = prob["n"], prob["nu"]
    if not isinstance(n, int) or not isinstance(nu, int) or not (1 <= n <= 8 and 0 <= nu <= n):
        raise DimensionMismatch("need integers 1 <= n <= 8 and 0 <= nu <= n")
    S = _matrix(prob["S"], n, "S")
    S0 = _matrix(prob["S0"], n, "S0")
    Sinf = _matrix(prob["Sinf"], n, "Sinf")
    _check_diagonal(S0, "S0")
    _check_diagonal(Sinf, "Sinf")
    opts = sec.get("options", {})
    unknown = set(opts) - set(ProblemOptions.__dataclass_fields__)
    if unknown:
        raise ParseError(f"unknown option(s): {', '.join(sorted(unknown))}")
    meta = sec.get("meta", {})
    P = NonlinearProblem.from_expressions(n, nu, S, S0, Sinf, ProblemOptions.from_dict(opts),
                                          str(meta.get("name", "")))
    P.sources["meta"] = dict(meta)
    return P


def load_problem(source: Union[str, Path]) -> NonlinearProblem:
    """Load a problem from a path or from the file text itself."""
    if isinstance(source, Path) or "\n" not in str(source):
        p = Path(source)
        if not p.is_file():
            raise ProblemFileError(f"problem file not found: {p}")
        text = p.read_text()
    else:
        text = str(source)
    return problem_from_sections(parse_sections(text))


def dump_problem(P: NonlinearProblem) -> str:
    """Problem file text for an expression-backed problem."""
    from dataclasses import asdict

    def mat(M):
        rows = ",\n     ".join("[" + ", ".join(repr(e) for e in r) + "]" for r in M)
        return "[" + rows + "]"

    lines = ["[meta]", f"name = {P.name!r}", "", "[problem]", f"n = {P.sig.n}", f"nu = {P.sig.nu}",
             f"S = {mat(P.sources['S'])}", f"S0 = {mat(P.sources['S0'])}", f"Sinf = {mat(P.sources['Sinf'])}",
             "", "[options]"]
    defaults = ProblemOptions()
    for k, v in asdict(P.options).items():
        if v != getattr(defaults, k):
            lines.append(f"{k} = {v!r}")
    return "\n".join(lines) + "\n"
