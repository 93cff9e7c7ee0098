"""Line-oriented chain documents.

::

    mcct v1
    mode discrete          # or continuous
    n 2
    0.7 0.3
    0.3 0.7
    weights 1              # optional: t rows of n values in [0, 1]
    1 0
    start                  # optional: initial distribution
    1 0

Everything after ``#`` on a line is ignored. Numbers are written with 17
significant digits so that emitting and re-parsing is bit exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain_core import ChainModel, Generator, as_distribution
from .errors import ChainError, ParseError, ValidationError
from .mgf_bounds import WeightSchedule

MAGIC = "mcct"
VERSION = "v1"
MODES = ("discrete", "continuous")


@dataclass(frozen=True, eq=False)
class ChainDocument:
    mode: str
    model: ChainModel | Generator
    weights: np.ndarray | None = None
    start: np.ndarray | None = None
    version: str = VERSION
    # Line numbers of the weights header and start row, for late validation.
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def matrix(self) -> np.ndarray:
        return self.model.rows if self.mode == "discrete" else self.model.rates

    def schedule(self, pi, t: int | None = None) -> WeightSchedule:
        """The weights as a schedule; a single row is repeated ``t`` times."""
        if self.weights is None:
            raise ValidationError(0, "document has no weights block")
        f = self.weights
        if t is not None and f.shape[0] != t:
            if f.shape[0] != 1:
                raise ValidationError(self.lines.get("weights", 0),
                                      f"weights block has {f.shape[0]} rows but t = {t}")
            f = np.tile(f, (t, 1))
        try:
            return WeightSchedule.from_functions(f, pi)
        except ValueError as exc:
            raise ValidationError(self.lines.get("weights", 0), str(exc)) from exc


class _Lines:
    """Iterator over (line number, tokens) with comments and blanks removed."""

    def __init__(self, text: str):
        self._items = []
        for k, raw in enumerate(text.split("\n"), start=1):
            body = raw.split("#", 1)[0].strip()
            if body:
                self._items.append((k, body.split()))
        self._pos = 0
        self.last = len(text.split("\n"))

    def peek(self):
        return self._items[self._pos] if self._pos < len(self._items) else None

    def take(self, what: str):
        item = self.peek()
        if item is None:
            raise ParseError(self.last, f"unexpected end of input, expected {what}")
        self._pos += 1
        return item


def _numbers(line: int, tokens, n: int) -> np.ndarray:
    if len(tokens) != n:
        raise ParseError(line, f"expected {n} numbers, got {len(tokens)}")
    try:
        return np.array([float(tok) for tok in tokens])
    except ValueError as exc:
        raise ParseError(line, f"not a number: {exc}") from None


def _keyword(lines: _Lines, key: str, nargs: int):
    line, tokens = lines.take(f"'{key}'")
    if tokens[0] != key or len(tokens) != nargs + 1:
        raise ParseError(line, f"expected '{key}' with {nargs} argument(s), got {' '.join(tokens)!r}")
    return line, tokens[1:]


def _count(line: int, token: str, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(line, f"{what} must be an integer, got {token!r}") from None
    if value < 1:
        raise ParseError(line, f"{what} must be positive, got {value}")
    return value


def parse_chain_file(text: str) -> ChainDocument:
    lines = _Lines(text)
    line, tokens = lines.take("header")
    if tokens != [MAGIC, VERSION]:
        raise ParseError(line, f"expected header '{MAGIC} {VERSION}', got {' '.join(tokens)!r}")
    line, (mode,) = _keyword(lines, "mode", 1)
    if mode not in MODES:
        raise ParseError(line, f"mode must be discrete or continuous, got {mode!r}")
    line, (count,) = _keyword(lines, "n", 1)
    n = _count(line, count, "n")

    row_lines = []
    rows = []
    for _ in range(n):
        line, tokens = lines.take("matrix row")
        row_lines.append(line)
        rows.append(_numbers(line, tokens, n))
    try:
        model = ChainModel(np.array(rows)) if mode == "discrete" else Generator(np.array(rows))
    except ChainError as exc:
        at = row_lines[exc.row] if exc.row is not None else row_lines[0]
        raise ValidationError(at, str(exc)) from exc

    weights = start = None
    where = {}
    while lines.peek() is not None:
        line, tokens = lines.take("section")
        if tokens[0] == "weights" and weights is None:
            if len(tokens) != 2:
                raise ParseError(line, "expected 'weights <t>'")
            where["weights"] = line
            t = _count(line, tokens[1], "t")
            block = [_numbers(*lines.take("weight row"), n) for _ in range(t)]
            weights = np.array(block)
            if np.any(weights < 0.0) or np.any(weights > 1.0):
                raise ValidationError(line, "weights must lie in [0, 1]")
            if mode == "continuous" and t != 1:
                raise ValidationError(line, "continuous time takes a single weight row")
        elif tokens == ["start"] and start is None:
            where["start"] = line
            row_line, row = lines.take("start row")
            try:
                start = as_distribution(_numbers(row_line, row, n), n)
            except ValueError as exc:
                raise ValidationError(row_line, str(exc)) from exc
        else:
            raise ParseError(line, f"unexpected {' '.join(tokens)!r}")
    return ChainDocument(mode, model, weights, start, VERSION, where)


def _row(values) -> str:
    return " ".join(format(float(x), ".17g") for x in values)


def emit_chain_file(doc: ChainDocument) -> str:
    out = [f"{MAGIC} {VERSION}", f"mode {doc.mode}", f"n {doc.n}"]
    out += [_row(r) for r in doc.matrix]
    if doc.weights is not None:
        out.append(f"weights {doc.weights.shape[0]}")
        out += [_row(r) for r in doc.weights]
    if doc.start is not None:
        out.append("start")
        out.append(_row(doc.start))
    return "\n".join(out) + "\n"


def read_chain_file(path) -> ChainDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_chain_file(fh.read())
