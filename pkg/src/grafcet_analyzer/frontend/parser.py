"""Text format for Grafcets: tokenizer and recursive-descent parser.

Errors are collected rather than raised one by one; the parser resynchronizes
at the next ``;`` or ``}`` so a single run reports every problem it can.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .. import expr as ex
from ..model import (
    INIT,
    STAR,
    Continuous,
    Forcing,
    Grafcet,
    OnActivation,
    OnDeactivation,
    OnEvent,
    PartialGrafcet,
    Step,
    Stored,
    Transition,
    VariableDecl,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    kind: str  # lexical | syntax | duplicate-id | unknown-reference
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span}: {self.kind} error: {self.message}"


class GrafcetParseError(Exception):
    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, OP, EOF
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<INT>\d+)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>:=|->|!=|<=|>=|[{}(),;:=<>!&|+\-*])
    """,
    re.VERBOSE,
)


def tokenize(text: str, filename: str = "<input>") -> tuple[list[Token], list[ParseError]]:
    tokens: list[Token] = []
    errors: list[ParseError] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, line, pos - line_start + 1, 1)
            errors.append(ParseError("lexical", f"unexpected character {text[pos]!r}", span))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("INT", "IDENT", "OP"):
            span = SourceSpan(filename, line, pos - line_start + 1, m.end() - pos)
            tokens.append(Token(kind, m.group(), span))
        pos = m.end()
    tokens.append(Token("EOF", "", SourceSpan(filename, line, pos - line_start + 1, 1)))
    return tokens, errors


class _Sync(Exception):
    pass


EDGE_FUNCS = {"rising": "rising", "up": "rising", "falling": "falling", "down": "falling"}
_COMPARE = set(ex.COMPARE_OPS)


class Parser:
    def __init__(self, text: str, filename: str = "<input>"):
        self.filename = filename
        self.tokens, self.errors = tokenize(text, filename)
        self.pos = 0
        self.var_refs: list[tuple[str, SourceSpan]] = []
        self.step_refs: list[tuple[ex.StepRef, SourceSpan]] = []

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "IDENT") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None, kind: str = "syntax") -> None:
        tok = tok or self.tok
        self.errors.append(ParseError(kind, message, tok.span))

    def fail(self, message: str) -> None:
        found = "end of file" if self.tok.kind == "EOF" else repr(self.tok.text)
        self.error(f"{message}, found {found}")
        raise _Sync()

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.fail(f"expected {what}")
        return self.advance()

    def sync(self) -> None:
        """Skip to just past the next ``;`` or to the next ``}`` at this nesting level."""
        depth = 0
        while self.tok.kind != "EOF":
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                if depth == 0:
                    return
                depth -= 1
                if depth == 0:
                    self.advance()
                    return
            elif self.at(";") and depth == 0:
                self.advance()
                return
            self.advance()

    # -- file structure --

    def parse_file(self) -> Grafcet:
        variables: list[VariableDecl] = []
        partials: list[PartialGrafcet] = []
        self._var_spans: dict[str, SourceSpan] = {}
        self._partial_refs: list[tuple[str, SourceSpan]] = []
        self._force_refs: list[tuple[str, int, SourceSpan]] = []
        partial_spans: dict[str, SourceSpan] = {}
        while self.tok.kind != "EOF":
            try:
                if self.tok.text in ("input", "internal", "output"):
                    variables.extend(self.var_decl())
                elif self.at("partial"):
                    name_tok = self.peek()
                    partial = self.partial()
                    if partial.name in partial_spans:
                        self.error(f"partial Grafcet {partial.name!r} declared twice", name_tok, "duplicate-id")
                    partial_spans.setdefault(partial.name, name_tok.span)
                    partials.append(partial)
                else:
                    self.fail("expected a variable declaration or 'partial'")
            except _Sync:
                self.sync()
                if self.at("}"):
                    self.advance()
        if not partials and not self.errors:
            self.error("a Grafcet needs at least one partial Grafcet")
        g = Grafcet(tuple(variables), tuple(partials))
        self._check_references(g)
        return g

    def var_decl(self) -> list[VariableDecl]:
        kind = self.advance().text
        if self.tok.text not in ("bool", "int"):
            self.fail("expected 'bool' or 'int'")
        sort = self.advance().text
        decls = []
        while True:
            name = self.expect_kind("IDENT", "a variable name")
            if name.text in self._var_spans:
                self.error(f"variable {name.text!r} declared twice", name, "duplicate-id")
            else:
                self._var_spans[name.text] = name.span
            decls.append(VariableDecl(name.text, kind, sort))
            if not self.at(","):
                break
            self.advance()
        self.expect(";")
        return decls

    def partial(self) -> PartialGrafcet:
        self.expect("partial")
        name = self.expect_kind("IDENT", "a partial Grafcet name").text
        self.expect("{")
        steps: list[Step] = []
        transitions: list[Transition] = []
        step_spans: dict[int, SourceSpan] = {}
        trans_ids: set[str] = set()
        arc_refs: list[tuple[int, SourceSpan]] = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.error(f"expected '}}' to close partial {name!r}, found end of file")
                break
            start = self.pos
            try:
                if self.at("step"):
                    step = self.step(name)
                    if step.id in step_spans:
                        self.error(f"step {step.id} declared twice in {name!r}", self.tokens[start + 1], "duplicate-id")
                    else:
                        step_spans[step.id] = self.tokens[start + 1].span
                    steps.append(step)
                elif self.at("transition"):
                    t, refs = self.transition()
                    if t.id in trans_ids:
                        self.error(f"transition {t.id!r} declared twice in {name!r}", self.tokens[start + 1], "duplicate-id")
                    trans_ids.add(t.id)
                    arc_refs.extend(refs)
                    transitions.append(t)
                else:
                    self.fail("expected 'step', 'transition' or '}'")
            except _Sync:
                self.sync()
        if self.at("}"):
            self.advance()
        for sid, span in arc_refs:
            if sid not in step_spans:
                self.errors.append(ParseError("unknown-reference", f"step {sid} is not declared in {name!r}", span))
        return PartialGrafcet(name, tuple(steps), tuple(transitions))

    def step(self, partial: str) -> Step:
        self.expect("step")
        sid = int(self.expect_kind("INT", "a step number").text)
        initial = marked = False
        encloses: list[str] = []
        while self.tok.text in ("initial", "marked", "encloses"):
            mod = self.advance().text
            if mod == "initial":
                initial = True
            elif mod == "marked":
                marked = True
            else:
                tok = self.expect_kind("IDENT", "an enclosed partial name")
                encloses.append(tok.text)
                self._partial_refs.append((tok.text, tok.span))
        actions = []
        if self.at("{"):
            self.advance()
            while not self.at("}"):
                if self.tok.kind == "EOF":
                    self.fail(f"expected '}}' to close step {sid}")
                try:
                    actions.append(self.action())
                except _Sync:
                    self.sync()
            self.advance()
        elif self.at(";"):
            self.advance()
        return Step(sid, initial, marked, tuple(encloses), tuple(actions))

    def action(self):
        if self.at("do"):
            self.advance()
            target = self.expect_kind("IDENT", "an output variable").text
            self.var_refs.append((target, self.tokens[self.pos - 1].span))
            cond = ex.TRUE
            if self.at("if"):
                self.advance()
                cond = self.expr()
            self.expect(";")
            return Continuous(target, cond)
        if self.at("store"):
            self.advance()
            target_tok = self.expect_kind("IDENT", "a variable")
            self.var_refs.append((target_tok.text, target_tok.span))
            self.expect(":=")
            value = self.expr()
            self.expect("on")
            if self.at("activation"):
                self.advance()
                trigger = OnActivation()
            elif self.at("deactivation"):
                self.advance()
                trigger = OnDeactivation()
            elif self.at("event"):
                self.advance()
                trigger = OnEvent(self.expr())
            else:
                self.fail("expected 'activation', 'deactivation' or 'event'")
            self.expect(";")
            return Stored(target_tok.text, value, trigger)
        if self.at("force"):
            self.advance()
            target = self.expect_kind("IDENT", "a partial Grafcet name")
            self._partial_refs.append((target.text, target.span))
            self.expect("to")
            if self.at("*"):
                self.advance()
                situation = STAR
            elif self.at("init"):
                self.advance()
                situation = INIT
            else:
                ids = self.int_list()
                for sid, span in ids:
                    self._force_refs.append((target.text, sid, span))
                situation = tuple(sid for sid, _ in ids)
            self.expect(";")
            return Forcing(target.text, situation)
        self.fail("expected 'do', 'store' or 'force'")

    def int_list(self) -> list[tuple[int, SourceSpan]]:
        self.expect("{")
        out = []
        if not self.at("}"):
            while True:
                tok = self.expect_kind("INT", "a step number")
                out.append((int(tok.text), tok.span))
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return out

    def transition(self):
        self.expect("transition")
        tid = self.expect_kind("IDENT", "a transition name").text
        self.expect(":")
        up = self.int_list()
        self.expect("->")
        down = self.int_list()
        self.expect("when")
        cond = self.expr()
        self.expect(";")
        t = Transition(tid, tuple(s for s, _ in up), tuple(s for s, _ in down), cond)
        return t, up + down

    # -- expressions --

    def expr(self) -> ex.Expr:
        left = self.and_expr()
        while self.at("|"):
            self.advance()
            left = ex.Or(left, self.and_expr())
        return left

    def and_expr(self) -> ex.Expr:
        left = self.compare()
        while self.at("&"):
            self.advance()
            left = ex.And(left, self.compare())
        return left

    def compare(self) -> ex.Expr:
        left = self.additive()
        if self.tok.kind == "OP" and self.tok.text in _COMPARE:
            op = self.advance().text
            left = ex.Compare(op, left, self.additive())
            if self.tok.kind == "OP" and self.tok.text in _COMPARE:
                self.fail("comparisons cannot be chained")
        return left

    def additive(self) -> ex.Expr:
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "OP":
            op = self.advance().text
            left = ex.Arith(op, left, self.term())
        return left

    def term(self) -> ex.Expr:
        left = self.unary()
        while self.at("*"):
            self.advance()
            left = ex.Arith("*", left, self.unary())
        return left

    def unary(self) -> ex.Expr:
        if self.at("!"):
            self.advance()
            return ex.Not(self.unary())
        if self.at("-"):
            self.advance()
            if self.tok.kind == "INT":
                return ex.IntConst(-int(self.advance().text))
            return ex.Arith("-", ex.IntConst(0), self.unary())
        return self.primary()

    def primary(self) -> ex.Expr:
        tok = self.tok
        if tok.kind == "INT":
            self.advance()
            return ex.IntConst(int(tok.text))
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "IDENT":
            if tok.text in ("true", "false"):
                self.advance()
                return ex.BoolConst(tok.text == "true")
            if self.peek().text == "(" and tok.text in EDGE_FUNCS:
                self.advance()
                self.advance()
                operand = self.expr()
                self.expect(")")
                return ex.EdgeAtom(EDGE_FUNCS[tok.text], operand)
            if self.peek().text == "(" and tok.text == "step":
                self.advance()
                self.advance()
                partial = self.expect_kind("IDENT", "a partial Grafcet name")
                self.expect(",")
                sid = int(self.expect_kind("INT", "a step number").text)
                self.expect(")")
                ref = ex.StepRef(partial.text, sid)
                self.step_refs.append((ref, partial.span))
                return ref
            self.advance()
            self.var_refs.append((tok.text, tok.span))
            return ex.VarRef(tok.text)
        self.fail("expected an expression")

    # -- cross references --

    def _check_references(self, g: Grafcet) -> None:
        declared = {v.name for v in g.variables}
        for name, span in self.var_refs:
            if name not in declared:
                self.errors.append(ParseError("unknown-reference", f"variable {name!r} is not declared", span))
        partials = {p.name: p for p in g.partials}
        for name, span in self._partial_refs:
            if name not in partials:
                self.errors.append(ParseError("unknown-reference", f"partial Grafcet {name!r} is not declared", span))
        for name, sid, span in self._force_refs:
            if name in partials and sid not in partials[name].step_ids:
                self.errors.append(ParseError("unknown-reference", f"step {sid} is not declared in {name!r}", span))
        for ref, span in self.step_refs:
            if ref.partial not in partials:
                self.errors.append(ParseError("unknown-reference", f"partial Grafcet {ref.partial!r} is not declared", span))
            elif ref.step not in partials[ref.partial].step_ids:
                self.errors.append(ParseError("unknown-reference", f"step {ref.step} is not declared in {ref.partial!r}", span))


def parse(text: str, filename: str = "<input>") -> Grafcet:
    """Parse a Grafcet file; raises ``GrafcetParseError`` listing every error found."""
    parser = Parser(text, filename)
    g = parser.parse_file()
    if parser.errors:
        errors = sorted(set(parser.errors), key=lambda e: (e.span.line, e.span.column, e.message))
        raise GrafcetParseError(errors)
    return g


def parse_file(path) -> Grafcet:
    from pathlib import Path

    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), str(path))
