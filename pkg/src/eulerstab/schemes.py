"""Explicit time-stepping scheme definitions.

Multi-stage schemes are stored as lower-triangular stage tableaus with exact
rational entries.  The stage update implied by a tableau is

    u_(0) = u_n
    u_(l) = sum_i a[l][i] * u_(i)  -  dt * sum_i b[l][i] * N(u_(i)),   i < l
    u_{n+1} = u_(k)

where N(v) is the projected advection term.  The minus sign on the b-terms
lives in the stepping and expansion code, so the stored b entries match the
usual textbook displays (all nonnegative for the built-ins).

The two-step Adams-Bashforth scheme does not fit this shape and gets its own
type, as do pure Taylor truncations of the exponential.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "SchemeError",
    "TableauParseError",
    "ExplicitTableau",
    "MultistepScheme",
    "TaylorScheme",
    "BUILTIN_NAMES",
    "builtin",
    "validate",
    "parse_tableau",
    "format_tableau",
]


class SchemeError(ValueError):
    """Unknown scheme name or structurally unusable scheme data."""


class TableauParseError(SchemeError):
    """Malformed tableau text; carries 1-based line/column of the offender."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ExplicitTableau:
    """Stage coefficients of a k-stage explicit scheme (exact rationals).

    ``a[l]`` and ``b[l]`` are the rows for stage ``l+1`` and hold ``l+1``
    entries each: the weights on states 0..l and on their advection terms.
    """

    name: str
    a: tuple[tuple[Fraction, ...], ...]
    b: tuple[tuple[Fraction, ...], ...]

    @property
    def k(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class MultistepScheme:
    """Two-step scheme u_{n+1} = u_n - dt * sum_j weights[j] * N(u_{n-j}).

    ``startup`` is the one-step tableau used for the very first step, before
    any history exists.  The paper-standard Adams-Bashforth 2 weights are
    (3/2, -1/2); they sum to one (first-order consistency).
    """

    name: str
    weights: tuple[Fraction, ...]
    startup: ExplicitTableau


@dataclass(frozen=True)
class TaylorScheme:
    """Pure order-m Taylor truncation of the exact time-advance map."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise SchemeError(f"Taylor truncation order must be >= 1, got {self.m}")


def _frac_rows(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def _tableau(name, a, b):
    return ExplicitTableau(name=name, a=_frac_rows(a), b=_frac_rows(b))


_EXPLICIT_EULER = _tableau("explicit-euler", [[1]], [[1]])

_CENTERED_2 = _tableau(
    "centered-2",
    [[1], [1, 0]],
    [[Fraction(1, 2)], [0, 1]],
)

_RK4 = _tableau(
    "rk4",
    [[1], [1, 0], [1, 0, 0], [1, 0, 0, 0]],
    [
        [Fraction(1, 2)],
        [0, Fraction(1, 2)],
        [0, 0, 1],
        [Fraction(1, 6), Fraction(1, 3), Fraction(1, 3), Fraction(1, 6)],
    ],
)

_AB2 = MultistepScheme(
    name="ab2",
    weights=(Fraction(3, 2), Fraction(-1, 2)),
    startup=_CENTERED_2,
)

_BUILTINS = {
    "explicit-euler": _EXPLICIT_EULER,
    "centered-2": _CENTERED_2,
    "rk4": _RK4,
    "ab2": _AB2,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str):
    """Return the built-in scheme with the given identifier.

    Raises SchemeError listing the valid identifiers for unknown names.
    """
    try:
        return _BUILTINS[name]
    except KeyError:
        valid = ", ".join(BUILTIN_NAMES)
        raise SchemeError(f"unknown scheme {name!r}; valid identifiers: {valid}") from None


def validate(t: ExplicitTableau) -> list[str]:
    """Check tableau structure; return a list of violations (empty = ok).

    Each stage row must be triangular (stage l has exactly l entries per
    side) and the a-row must sum to one so the constant mode is preserved.
    """
    violations = []
    if t.k < 1:
        violations.append("k >= 1 required (empty stage list)")
        return violations
    if len(t.b) != t.k:
        violations.append(f"a has {t.k} stages but b has {len(t.b)}")
    for l, row in enumerate(t.a, start=1):
        if len(row) != l:
            violations.append(f"stage {l}: a-row has {len(row)} entries, expected {l}")
        s = sum(row)
        if s != 1:
            violations.append(f"stage {l}: a-row sums to {s}, expected 1")
    for l, row in enumerate(t.b, start=1):
        if len(row) != l:
            violations.append(f"stage {l}: b-row has {len(row)} entries, expected {l}")
    return violations


_TOKEN = re.compile(r"\S+")


def _parse_fraction(token, line_no, col):
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise TableauParseError(f"not a rational number: {token!r}", line_no, col) from None


def parse_tableau(text: str) -> ExplicitTableau:
    """Parse the plain-text tableau format.

    One stage per line, the a-entries then the b-entries separated by '|',
    rationals written as p/q.  '#' starts a comment; an optional leading
    ``name <label>`` line names the scheme.  Example (the two-stage
    centered scheme)::

        name centered-2
        1 | 1/2
        1 0 | 0 1
    """
    name = "custom"
    a_rows, b_rows = [], []
    stage = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]
        if stage == 0 and not a_rows and tokens[0][0] == "name":
            if len(tokens) != 2:
                raise TableauParseError("expected: name <label>", line_no, tokens[0][1])
            name = tokens[1][0]
            continue
        stage += 1
        bars = [i for i, (tok, _) in enumerate(tokens) if tok == "|"]
        if len(bars) != 1:
            raise TableauParseError(
                "stage line needs exactly one '|' between a- and b-entries",
                line_no,
                tokens[0][1],
            )
        left, right = tokens[: bars[0]], tokens[bars[0] + 1 :]
        for side, toks in (("a", left), ("b", right)):
            if len(toks) != stage:
                col = toks[0][1] if toks else tokens[bars[0]][1]
                raise TableauParseError(
                    f"stage {stage}: {side}-side has {len(toks)} entries, expected {stage}",
                    line_no,
                    col,
                )
        a_rows.append([_parse_fraction(tok, line_no, col) for tok, col in left])
        b_rows.append([_parse_fraction(tok, line_no, col) for tok, col in right])
    if not a_rows:
        raise TableauParseError("no stage lines found", 1, 1)
    return _tableau(name, a_rows, b_rows)


def format_tableau(t: ExplicitTableau) -> str:
    """Render a tableau in the plain-text format; exact round-trip with parse."""
    lines = [f"name {t.name}"]
    for arow, brow in zip(t.a, t.b):
        lines.append(
            " ".join(str(x) for x in arow) + " | " + " ".join(str(x) for x in brow)
        )
    return "\n".join(lines) + "\n"
