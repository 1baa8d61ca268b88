"""A small line-oriented pulse-sequence language (``.ionseq``).

Example::

    experiment ramsey {
      kind ramsey_fringe
      prep S-1/2 axial 0
      pulse carrier pi/2
      wait 100us
      pulse carrier pi/2
      scan detuning -20kHz..20kHz step 250Hz
      shots 100
    }

Quantities keep exact rational values in canonical units (us, Hz, and
angles in units of pi, or rad when given in rad), so ``100us`` and
``0.1ms`` compare equal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .config import SimConfig
from .engine import (Measure, Preparation, Pulse, ScanDirective, Sequence, TransitionError, Wait,
                     calibrated_pulse, timed_pulse)
from .experiments import EXPERIMENT_KINDS
from .physics import D, S, ZeemanState

KEYWORDS = ("experiment", "kind", "prep", "pulse", "wait", "measure", "shelve", "scan", "step",
            "shots", "trigger", "line", "delay", "phase", "detuning", "duration")
UNITS = ("us", "ms", "s", "Hz", "kHz", "MHz", "deg", "rad", "pi")
PULSE_KINDS = ("carrier", "blue", "red", "raman")
SCAN_AXES = ("detuning", "duration", "wait", "delay", "phase", "repeat", "cutoff")
MODES = ("axial", "radial")
MAX_MAGNITUDE = Fraction(10) ** 30

_TIME = {"us": Fraction(1), "ms": Fraction(1000), "s": Fraction(10 ** 6)}
_FREQ = {"Hz": Fraction(1), "kHz": Fraction(1000), "MHz": Fraction(10 ** 6)}
_AXIS_DIM = {"detuning": "freq", "duration": "time", "wait": "time", "delay": "time",
             "phase": "angle", "repeat": "count", "cutoff": "time"}
_DIM_UNITS = {"time": "us, ms, s", "freq": "Hz, kHz, MHz", "angle": "pi, deg, rad",
              "count": "a bare number"}


class SeqLangError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ParseError(SeqLangError):
    pass


class ValidationError(SeqLangError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # keyword, identifier, number, unit, punctuation
    text: str
    line: int
    column: int
    value: Fraction | None = None


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<state>[SD][+-]\d+/2(?![A-Za-z0-9_]))
  | (?P<pi>(?P<psign>[+-])?(?P<pcoef>\d+(?:\.\d+)?)?pi(?:/(?P<pden>\d+))?(?![A-Za-z0-9_]))
  | (?P<number>[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d{1,3})?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>->|\.\.|[{}])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens; comments run from ``#`` to end of line."""
    tokens = []
    pos, line, col0 = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - col0 + 1
        if m is None:
            raise ParseError(f"illegal character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            col0 = m.end()
        elif kind == "state":
            tokens.append(Token("identifier", s, line, col))
        elif kind in ("pi", "psign", "pcoef", "pden"):
            coef = Fraction(m.group("pcoef")) if m.group("pcoef") else Fraction(1)
            if m.group("psign") == "-":
                coef = -coef
            den = int(m.group("pden")) if m.group("pden") else 1
            if den == 0:
                raise ParseError("division by zero in pi fraction", line, col)
            tokens.append(Token("number", s, line, col, coef / den))
            tokens.append(Token("unit", "pi", line, col))
        elif kind == "number":
            value = Fraction(s)
            if abs(value) > MAX_MAGNITUDE:
                raise ParseError(f"number {s} out of range", line, col)
            tokens.append(Token("number", s, line, col, value))
            # a unit may follow the number directly, as in 100us
            u = re.match(r"(us|ms|s|Hz|kHz|MHz|deg|rad)(?![A-Za-z0-9_])", text[m.end():])
            if u:
                tokens.append(Token("unit", u.group(), line, col + len(s)))
                pos = m.end() + u.end()
                continue
        elif kind == "word":
            if s in KEYWORDS:
                tokens.append(Token("keyword", s, line, col))
            elif s in UNITS:
                tokens.append(Token("unit", s, line, col))
            else:
                tokens.append(Token("identifier", s, line, col))
        elif kind == "punct":
            tokens.append(Token("punctuation", s, line, col))
        pos = m.end()
    return tokens


# -- program structure -------------------------------------------------------------

@dataclass(frozen=True)
class Quantity:
    """Exact value in canonical units: time in us, frequency in Hz, angle in
    units of pi (``unit='pi'``) or radians (``unit='rad'``), count bare."""

    dim: str
    value: Fraction
    unit: str = ""

    def as_float(self) -> float:
        if self.dim == "angle" and self.unit == "pi":
            return float(self.value) * math.pi
        return float(self.value)

    def in_pi(self) -> float:
        if self.unit == "pi":
            return float(self.value)
        return float(self.value) / math.pi


@dataclass(frozen=True)
class PulseStmt:
    kind: str
    area: Quantity | None
    duration: Quantity | None = None
    transition: tuple | None = None  # (lower, upper) ZeemanStates
    phase: Quantity | None = None
    detuning: Quantity | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class WaitStmt:
    duration: Quantity
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MeasureStmt:
    shelve: tuple | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ScanClause:
    axis: str
    start: Quantity
    stop: Quantity
    step: Quantity
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def values(self) -> list[Fraction]:
        """Inclusive of both ends; the point count is rounded up so that the
        spacing never exceeds ``step``."""
        span = self.stop.value - self.start.value
        if span == 0:
            return [self.start.value]
        count = math.ceil(abs(span) / self.step.value) + 1
        return [self.start.value + span * k / (count - 1) for k in range(count)]


@dataclass(frozen=True)
class Block:
    name: str
    kind: str | None = None
    prep: tuple | None = None  # (state, ((mode, nbar), ...))
    elements: tuple = ()
    scan: ScanClause | None = None
    shots: int | None = None
    trigger: Quantity | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Program:
    blocks: tuple = ()

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


# -- parser ----------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.toks = list(tokens)
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def _where(self):
        tok = self.peek()
        if tok is not None:
            return tok.line, tok.column
        if self.toks:
            last = self.toks[-1]
            return last.line, last.column + len(last.text)
        return 1, 1

    def error(self, message):
        raise ParseError(message, *self._where())

    def expect(self, kind, text=None, what=None):
        tok = self.peek()
        if tok is None or tok.kind != kind or (text is not None and tok.text != text):
            want = what or (repr(text) if text else kind)
            got = "end of input" if tok is None else repr(tok.text)
            self.error(f"expected {want}, got {got}")
        self.i += 1
        return tok

    def at(self, kind, text=None):
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def number(self, what="number"):
        tok = self.peek()
        if tok is None or tok.kind != "number":
            self.error(f"expected {what}, got {'end of input' if tok is None else repr(tok.text)}")
        self.i += 1
        return tok

    def quantity(self, dims, what):
        num = self.number(what)
        unit_tok = self.peek()
        unit = unit_tok.text if unit_tok is not None and unit_tok.kind == "unit" else None
        if unit is not None:
            self.i += 1
        if unit in _TIME:
            q = Quantity("time", num.value * _TIME[unit], "us")
        elif unit in _FREQ:
            q = Quantity("freq", num.value * _FREQ[unit], "Hz")
        elif unit == "pi":
            q = Quantity("angle", num.value, "pi")
        elif unit == "deg":
            q = Quantity("angle", num.value / 180, "pi")
        elif unit == "rad":
            q = Quantity("angle", num.value, "rad")
        else:
            q = Quantity("count", num.value, "")
        if q.dim not in dims:
            expected = " or ".join(f"{d} ({_DIM_UNITS[d]})" for d in dims)
            got = unit or "no unit"
            raise ParseError(f"unit mismatch: expected {what} in {expected}, got {got}",
                             num.line, num.column)
        return q

    def state(self):
        tok = self.expect("identifier", what="Zeeman state such as S-1/2")
        try:
            return ZeemanState.parse(tok.text)
        except ValueError as exc:
            raise ParseError(str(exc), tok.line, tok.column) from None

    def transition(self):
        lower = self.state()
        self.expect("punctuation", "->")
        return lower, self.state()

    def program(self):
        blocks = []
        names = set()
        while self.peek() is not None:
            b = self.block()
            if b.name in names:
                raise ParseError(f"duplicate experiment name {b.name!r}", b.line, b.column)
            names.add(b.name)
            blocks.append(b)
        return Program(tuple(blocks))

    def block(self):
        head = self.expect("keyword", "experiment", "'experiment'")
        name = self.expect("identifier", what="experiment name").text
        self.expect("punctuation", "{")
        clauses = {}
        elements = []

        def once(key, tok):
            if key in clauses:
                raise ParseError(f"duplicate '{key}' clause", tok.line, tok.column)

        while not self.at("punctuation", "}"):
            tok = self.peek()
            if tok is None:
                self.error("expected '}' to close experiment block, got end of input")
            if tok.kind != "keyword" or tok.text not in (
                    "kind", "prep", "pulse", "wait", "measure", "scan", "shots", "trigger"):
                self.error("expected one of kind, prep, pulse, wait, measure, scan, shots, "
                           f"trigger or '}}', got {tok.text!r}")
            self.i += 1
            key = tok.text
            if key == "pulse":
                elements.append(self.pulse(tok))
            elif key == "wait":
                elements.append(WaitStmt(self.quantity(("time",), "wait duration"),
                                         tok.line, tok.column))
            elif key == "measure":
                if any(isinstance(e, MeasureStmt) for e in elements):
                    raise ParseError("duplicate 'measure' clause", tok.line, tok.column)
                shelve = None
                if self.at("keyword", "shelve"):
                    self.i += 1
                    shelve = self.transition()
                elements.append(MeasureStmt(shelve, tok.line, tok.column))
            else:
                once(key, tok)
                if key == "kind":
                    k = self.expect("identifier", what="experiment kind")
                    if k.text not in EXPERIMENT_KINDS:
                        raise ParseError(f"unknown experiment kind {k.text!r}; expected one of "
                                         f"{', '.join(EXPERIMENT_KINDS)}", k.line, k.column)
                    clauses[key] = k.text
                elif key == "prep":
                    clauses[key] = self.prep()
                elif key == "scan":
                    clauses[key] = self.scan(tok)
                elif key == "shots":
                    num = self.number("shot count")
                    if num.value.denominator != 1 or num.value <= 0:
                        raise ParseError("shots must be a positive integer", num.line, num.column)
                    clauses[key] = int(num.value)
                elif key == "trigger":
                    self.expect("keyword", "line", "'line'")
                    self.expect("keyword", "delay", "'delay'")
                    clauses[key] = self.quantity(("time",), "trigger delay")
        self.expect("punctuation", "}")
        if "scan" not in clauses:
            raise ParseError(f"experiment {name!r} has no scan clause", head.line, head.column)
        if any(isinstance(e, MeasureStmt) for e in elements[:-1]):
            m = next(e for e in elements[:-1] if isinstance(e, MeasureStmt))
            raise ParseError("'measure' must be the last element", m.line, m.column)
        return Block(name, clauses.get("kind"), clauses.get("prep"), tuple(elements),
                     clauses["scan"], clauses.get("shots"), clauses.get("trigger"),
                     head.line, head.column)

    def prep(self):
        state = self.state()
        thermal = []
        seen = set()
        while self.at("identifier") and self.peek().text in MODES:
            mode_tok = self.peek()
            self.i += 1
            if mode_tok.text in seen:
                raise ParseError(f"duplicate mode {mode_tok.text!r} in prep", mode_tok.line,
                                 mode_tok.column)
            seen.add(mode_tok.text)
            nbar = self.number("mean phonon number")
            if nbar.value < 0:
                raise ParseError("mean phonon number must be >= 0", nbar.line, nbar.column)
            thermal.append((mode_tok.text, nbar.value))
        return state, tuple(thermal)

    def pulse(self, head):
        kind_tok = self.expect("identifier", what="pulse kind (carrier, blue, red, raman)")
        if kind_tok.text not in PULSE_KINDS:
            raise ParseError(f"unknown pulse kind {kind_tok.text!r}; expected one of "
                             f"{', '.join(PULSE_KINDS)}", kind_tok.line, kind_tok.column)
        transition = None
        if self.at("identifier"):
            transition = self.transition()
        first = self.quantity(("angle", "time"), "pulse area or duration")
        area, duration = (first, None) if first.dim == "angle" else (None, first)
        opts = {}
        while self.at("keyword") and self.peek().text in ("phase", "detuning", "duration"):
            tok = self.peek()
            self.i += 1
            if tok.text in opts or (tok.text == "duration" and duration is not None):
                raise ParseError(f"duplicate '{tok.text}' option", tok.line, tok.column)
            if tok.text == "phase":
                opts["phase"] = self.quantity(("angle",), "phase")
            elif tok.text == "detuning":
                opts["detuning"] = self.quantity(("freq",), "detuning")
            else:
                opts["duration"] = self.quantity(("time",), "pulse duration")
        duration = opts.pop("duration", duration)
        return PulseStmt(kind_tok.text, area, duration, transition, opts.get("phase"),
                         opts.get("detuning"), head.line, head.column)

    def scan(self, head):
        axis_tok = self.peek()
        if axis_tok is None or axis_tok.text not in SCAN_AXES:
            self.error(f"expected scan axis ({', '.join(SCAN_AXES)}), got "
                       f"{'end of input' if axis_tok is None else repr(axis_tok.text)}")
        self.i += 1
        axis = axis_tok.text
        dim = _AXIS_DIM[axis]
        start = self.quantity((dim,), f"{axis} scan start")
        self.expect("punctuation", "..", "'..'")
        stop = self.quantity((dim,), f"{axis} scan stop")
        self.expect("keyword", "step", "'step'")
        step_tok = self.peek()
        step = self.quantity((dim,), f"{axis} scan step")
        if step.value <= 0:
            raise ParseError("scan step must be > 0", step_tok.line, step_tok.column)
        if start.unit != stop.unit or start.unit != step.unit:
            raise ParseError("scan start, stop and step must share angle units",
                             axis_tok.line, axis_tok.column)
        return ScanClause(axis, start, stop, step, head.line, head.column)


def parse(tokens) -> Program:
    """Parse a token list (or raw text) into a Program."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(tokens).program()


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# -- printer ---------------------------------------------------------------------

def _decimal(v: Fraction) -> str:
    """Exact decimal text for a fraction with a terminating expansion."""
    sign = "-" if v < 0 else ""
    v = abs(v)
    den = v.denominator
    k = 0
    while den % 2 == 0 or den % 5 == 0:
        den //= 10 if den % 10 == 0 else (2 if den % 2 == 0 else 5)
        k += 1
    if den != 1:
        raise ValueError(f"{v} has no finite decimal expansion")
    scaled = v * 10 ** k
    digits = str(scaled.numerator // scaled.denominator).rjust(k + 1, "0")
    if k:
        digits = (digits[:-k] + "." + digits[-k:]).rstrip("0").rstrip(".")
    return sign + digits


def _fmt(q: Quantity) -> str:
    if q.dim == "time":
        return _decimal(q.value) + "us"
    if q.dim == "freq":
        return _decimal(q.value) + "Hz"
    if q.dim == "count":
        return _decimal(q.value)
    if q.unit == "rad":
        return _decimal(q.value) + "rad"
    v = q.value
    if v.denominator == 1:
        return f"{v.numerator}pi"
    try:
        return f"{_decimal(v)}pi"
    except ValueError:
        return f"{v.numerator}pi/{v.denominator}"


def _fmt_state(s: ZeemanState) -> str:
    return str(s)


def pretty_print(program: Program) -> str:
    """Canonical text for ``program``; parsing it gives back an equal Program."""
    out = []
    for b in program.blocks:
        out.append(f"experiment {b.name} {{")
        if b.kind:
            out.append(f"  kind {b.kind}")
        if b.prep:
            state, thermal = b.prep
            extra = "".join(f" {mode} {_decimal(nb)}" for mode, nb in thermal)
            out.append(f"  prep {_fmt_state(state)}{extra}")
        for el in b.elements:
            if isinstance(el, PulseStmt):
                parts = [f"  pulse {el.kind}"]
                if el.transition:
                    parts.append(f"{el.transition[0]} -> {el.transition[1]}")
                if el.area is not None:
                    parts.append(_fmt(el.area))
                    if el.duration is not None:
                        parts.append(f"duration {_fmt(el.duration)}")
                else:
                    parts.append(_fmt(el.duration))
                if el.phase is not None:
                    parts.append(f"phase {_fmt(el.phase)}")
                if el.detuning is not None:
                    parts.append(f"detuning {_fmt(el.detuning)}")
                out.append(" ".join(parts))
            elif isinstance(el, WaitStmt):
                out.append(f"  wait {_fmt(el.duration)}")
            else:
                shelve = f" shelve {el.shelve[0]} -> {el.shelve[1]}" if el.shelve else ""
                out.append(f"  measure{shelve}")
        s = b.scan
        out.append(f"  scan {s.axis} {_fmt(s.start)}..{_fmt(s.stop)} step {_fmt(s.step)}")
        if b.shots is not None:
            out.append(f"  shots {b.shots}")
        if b.trigger is not None:
            out.append(f"  trigger line delay {_fmt(b.trigger)}")
        out.append("}")
        out.append("")
    return "\n".join(out)


# -- validation ------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledExperiment:
    name: str
    kind: str | None
    sequence: Sequence
    scan: ScanDirective
    shots: int
    warnings: tuple = ()


DEFAULT_SHOTS = 100


def _compile_pulse(el: PulseStmt, cfg: SimConfig) -> Pulse:
    lower, upper = el.transition if el.transition else (S(Fraction(-1, 2)), D(Fraction(-1, 2)))
    kwargs = {"phase": el.phase.as_float() if el.phase else 0.0,
              "detuning": el.detuning.as_float() if el.detuning else 0.0}
    try:
        if el.kind == "raman":
            if el.transition and (lower, upper) != (S(Fraction(-1, 2)), S(Fraction(1, 2))):
                raise TransitionError("a Raman pulse couples S-1/2 -> S+1/2")
            lower, upper = S(Fraction(-1, 2)), S(Fraction(1, 2))
        if el.area is not None and el.duration is not None:
            return timed_pulse(cfg, el.kind, el.duration.as_float(), el.area.in_pi(),
                               lower=lower, upper=upper, **kwargs)
        if el.area is not None:
            return calibrated_pulse(cfg, el.kind, el.area.in_pi(), lower, upper, **kwargs)
        p = calibrated_pulse(cfg, el.kind, 1.0, lower, upper, **kwargs)
        return Pulse(p.kind, el.duration.as_float(), p.omega0, p.phase, p.detuning, lower, upper)
    except (TransitionError, ValueError) as exc:
        raise ValidationError(str(exc), el.line, el.column) from None


def _scan_values(scan: ScanClause) -> tuple:
    vals = scan.values()
    if scan.axis in ("wait", "delay"):
        return tuple(float(v / 1000) for v in vals)  # us -> ms
    if scan.axis == "phase":
        return tuple(float(v) * math.pi if scan.start.unit == "pi" else float(v) for v in vals)
    return tuple(float(v) for v in vals)


def validate_block(block: Block, cfg: SimConfig) -> CompiledExperiment:
    warnings = []
    if block.prep:
        state, thermal = block.prep
        prep = Preparation(state, tuple((m, float(nb)) for m, nb in thermal))
    else:
        prep = Preparation()
    elements = []
    for el in block.elements:
        if isinstance(el, PulseStmt):
            elements.append(_compile_pulse(el, cfg))
        elif isinstance(el, WaitStmt):
            elements.append(Wait(float(el.duration.value / 1000)))
        else:
            shelve = None
            if el.shelve:
                shelve_stmt = PulseStmt("carrier", Quantity("angle", Fraction(1), "pi"), None,
                                        el.shelve, line=el.line, column=el.column)
                shelve = _compile_pulse(shelve_stmt, cfg)
                shelve = calibrated_pulse(cfg, "carrier", 1.0, shelve.lower, shelve.upper,
                                          calibration="shelving")
            elements.append(Measure(shelve))
    if not any(isinstance(e, Measure) for e in elements):
        elements.append(Measure())
    pulses = [e for e in block.elements if isinstance(e, PulseStmt)]
    if pulses and pulses[0].kind == "red" and prep.nbar(cfg.active_mode) == 0 \
            and not prep.level.is_d:
        warnings.append(f"line {pulses[0].line}: red sideband from |S, n=0> is dark")
    axis = block.scan.axis
    needs = {"detuning": PulseStmt, "duration": PulseStmt, "phase": PulseStmt, "wait": WaitStmt}
    if axis in needs and not any(isinstance(e, needs[axis]) for e in block.elements):
        raise ValidationError(f"scan axis '{axis}' is not present in any element",
                              block.scan.line, block.scan.column)
    if axis == "cutoff" and not pulses and not any(isinstance(e, WaitStmt) for e in block.elements):
        raise ValidationError("scan axis 'cutoff' needs at least one pulse or wait",
                              block.scan.line, block.scan.column)
    values = _scan_values(block.scan)
    if axis == "delay" and any(not 0 <= v < 20 for v in values):
        raise ValidationError("trigger delays must lie in [0, 20) ms", block.scan.line,
                              block.scan.column)
    delay = float(block.trigger.value / 1000) if block.trigger is not None else 0.0
    try:
        seq = Sequence(prep, tuple(elements), delay)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc), block.line, block.column) from None
    return CompiledExperiment(block.name, block.kind, seq, ScanDirective(axis, values),
                              block.shots or DEFAULT_SHOTS, tuple(warnings))


def validate(program: Program, cfg: SimConfig | None = None) -> list[CompiledExperiment]:
    """Resolve every block against ``cfg``: transitions, selection rules,
    pulse areas to durations and the scan directive."""
    cfg = cfg or SimConfig()
    return [validate_block(b, cfg) for b in program.blocks]
