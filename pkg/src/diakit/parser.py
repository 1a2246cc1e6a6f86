"""Lexer and recursive-descent parser for the design language, plus the
textual discovery-query parser and a canonical pretty printer.

Parsing is total: errors are reported as diagnostics and the parser resumes
at the next top-level declaration, so one bad block never hides the rest of
a file.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import filters
from .model import (
    ActionDecl,
    ActionUse,
    ContextBinding,
    ContextDecl,
    ControllerDecl,
    DECL_KEYWORDS,
    Decl,
    DeviceDecl,
    EnumDecl,
    InputBinding,
    Loc,
    MethodDecl,
    SourceBinding,
    SourceDecl,
    SourceUnit,
    SpecModel,
    StructDecl,
    TypedName,
    TypeRef,
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}: {self.severity}[{self.code}]: {self.message}"


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = "{}();,[]"


@dataclass(frozen=True)
class _Tok:
    kind: str  # "ident" | "punct" | "eof"
    value: str
    line: int
    col: int


def _lex(path: str, text: str) -> tuple[list[_Tok], list[Diagnostic]]:
    toks: list[_Tok] = []
    diags: list[Diagnostic] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int = 1):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    bad_start: tuple[int, int] | None = None

    def flush_bad():
        nonlocal bad_start
        if bad_start is not None:
            diags.append(
                Diagnostic("error", "P001", "unexpected character(s)", path, bad_start[0], bad_start[1])
            )
            bad_start = None

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            flush_bad()
            advance()
        elif text.startswith("//", i):
            flush_bad()
            while i < n and text[i] != "\n":
                advance()
        elif text.startswith("/*", i):
            flush_bad()
            start_line, start_col = line, col
            advance(2)
            closed = False
            while i < n:
                if text.startswith("*/", i):
                    advance(2)
                    closed = True
                    break
                advance()
            if not closed:
                diags.append(
                    Diagnostic("error", "P002", "unterminated block comment", path, start_line, start_col)
                )
        elif c.isalpha() or c == "_":
            flush_bad()
            start_line, start_col = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], start_line, start_col))
            advance(j - i)
        elif c in _PUNCT:
            flush_bad()
            toks.append(_Tok("punct", c, line, col))
            advance()
        else:
            if bad_start is None:
                bad_start = (line, col)
            advance()
    flush_bad()
    toks.append(_Tok("eof", "", line, col))
    return toks, diags


# ---------------------------------------------------------------------------
# Parser

class _ParseAbort(Exception):
    """Internal: unwinds to the recovery point for the current declaration."""


class _Parser:
    def __init__(self, path: str, toks: list[_Tok], diags: list[Diagnostic]):
        self.path = path
        self.toks = toks
        self.pos = 0
        self.diags = diags

    # -- token plumbing ----------------------------------------------------

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def at_ident(self, *words: str) -> bool:
        return self.cur.kind == "ident" and (not words or self.cur.value in words)

    def at_punct(self, p: str) -> bool:
        return self.cur.kind == "punct" and self.cur.value == p

    def take(self) -> _Tok:
        t = self.cur
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, code: str, message: str, tok: _Tok | None = None) -> None:
        t = tok or self.cur
        self.diags.append(Diagnostic("error", code, message, self.path, t.line, t.col))

    def fail(self, code: str, message: str, tok: _Tok | None = None):
        self.error(code, message, tok)
        raise _ParseAbort()

    def expect_word(self, word: str, code: str = "P001") -> _Tok:
        if self.at_ident(word):
            return self.take()
        self.fail(code, f"expected '{word}'")

    def expect_punct(self, p: str, code: str = "P001") -> _Tok:
        if self.at_punct(p):
            return self.take()
        self.fail(code, f"expected '{p}'")

    def expect_name(self, what: str = "identifier") -> str:
        if self.cur.kind == "ident":
            return self.take().value
        self.fail("P001", f"expected {what}")

    def loc(self, tok: _Tok) -> Loc:
        return Loc(self.path, tok.line, tok.col)

    # -- grammar -----------------------------------------------------------

    def parse_unit(self, text: str) -> SourceUnit:
        decls: list[Decl] = []
        while self.cur.kind != "eof":
            if not self.at_ident(*DECL_KEYWORDS):
                self.error("P001", f"expected a declaration, found {self.cur.value!r}")
                self.skip_to_decl(consume_current=True)
                continue
            try:
                decls.append(self.declaration())
            except _ParseAbort:
                self.skip_to_decl()
        return SourceUnit(self.path, text, tuple(decls))

    def skip_to_decl(self, consume_current: bool = False) -> None:
        """Recover: skip tokens until the next plausible top-level declaration."""
        depth = 0
        if consume_current:
            if self.at_punct("{"):
                depth += 1
            self.take()
        while self.cur.kind != "eof":
            if depth == 0 and self.at_ident(*DECL_KEYWORDS):
                return
            if self.at_punct("{"):
                depth += 1
            elif self.at_punct("}"):
                depth = max(0, depth - 1)
            self.take()

    def declaration(self) -> Decl:
        kw = self.cur.value
        if kw == "device":
            return self.device()
        if kw == "action":
            return self.action()
        if kw == "structure":
            return self.structure()
        if kw == "enumeration":
            return self.enumeration()
        if kw == "context":
            return self.context()
        assert kw == "controller"
        return self.controller()

    def type_ref(self) -> TypeRef:
        name = self.expect_name("type name")
        t = TypeRef.of(name)
        if self.at_punct("["):
            self.take()
            self.expect_punct("]")
            t = TypeRef.array(t)
        return t

    def open_block(self) -> _Tok:
        return self.expect_punct("{")

    def block_end(self, opener: _Tok) -> bool:
        """True once the matching `}` is consumed; aborts with P002 at EOF."""
        if self.at_punct("}"):
            self.take()
            return True
        if self.cur.kind == "eof":
            self.fail("P002", "unterminated block", opener)
        return False

    def device(self) -> DeviceDecl:
        head = self.take()  # 'device'
        name = self.expect_name("device name")
        parent = None
        if self.at_ident("extends"):
            self.take()
            parent = self.expect_name("parent device name")
            while self.at_ident("extends"):
                bad = self.take()
                self.error("P003", "duplicate 'extends' clause (single inheritance only)", bad)
                self.expect_name("parent device name")
        opener = self.open_block()
        attrs: list[TypedName] = []
        sources: list[SourceDecl] = []
        refs: list[str] = []
        while not self.block_end(opener):
            if self.at_ident("attribute"):
                self.take()
                a_name = self.expect_name("attribute name")
                self.expect_word("as")
                attrs.append(TypedName(a_name, self.type_ref()))
                self.expect_punct(";")
            elif self.at_ident("source"):
                sources.append(self.source_decl())
            elif self.at_ident("action"):
                self.take()
                refs.append(self.expect_name("action name"))
                self.expect_punct(";")
            else:
                self.fail("P001", f"expected a device member, found {self.cur.value!r}")
        return DeviceDecl(name, parent, tuple(attrs), tuple(sources), tuple(refs), self.loc(head))

    def source_decl(self) -> SourceDecl:
        self.take()  # 'source'
        name = self.expect_name("source name")
        self.expect_word("as")
        vtype = self.type_ref()
        indices: list[TypedName] = []
        if self.at_ident("indexed"):
            self.take()
            if not self.at_ident("by"):
                self.fail("P004", "malformed 'indexed by' clause: expected 'by'")
            self.take()
            while True:
                if self.cur.kind != "ident":
                    self.fail("P004", "malformed 'indexed by' clause: expected index name")
                idx_name = self.take().value
                if not self.at_ident("as"):
                    self.fail("P004", "malformed 'indexed by' clause: expected 'as'")
                self.take()
                indices.append(TypedName(idx_name, self.type_ref()))
                if self.at_punct(","):
                    self.take()
                    continue
                break
        self.expect_punct(";")
        return SourceDecl(name, vtype, tuple(indices))

    def action(self) -> ActionDecl:
        head = self.take()  # 'action'
        name = self.expect_name("action name")
        opener = self.open_block()
        methods: list[MethodDecl] = []
        while not self.block_end(opener):
            m_name = self.expect_name("method name")
            self.expect_punct("(")
            params: list[TypedName] = []
            if not self.at_punct(")"):
                while True:
                    p_name = self.expect_name("parameter name")
                    self.expect_word("as")
                    params.append(TypedName(p_name, self.type_ref()))
                    if self.at_punct(","):
                        self.take()
                        continue
                    break
            self.expect_punct(")")
            self.expect_punct(";")
            methods.append(MethodDecl(m_name, tuple(params)))
        return ActionDecl(name, tuple(methods), self.loc(head))

    def structure(self) -> StructDecl:
        head = self.take()
        name = self.expect_name("structure name")
        opener = self.open_block()
        fields: list[TypedName] = []
        while not self.block_end(opener):
            f_name = self.expect_name("field name")
            self.expect_word("as")
            fields.append(TypedName(f_name, self.type_ref()))
            self.expect_punct(";")
        return StructDecl(name, tuple(fields), self.loc(head))

    def enumeration(self) -> EnumDecl:
        head = self.take()
        name = self.expect_name("enumeration name")
        opener = self.open_block()
        values = [self.expect_name("enumeration value")]
        while self.at_punct(","):
            self.take()
            values.append(self.expect_name("enumeration value"))
        if not self.block_end(opener):
            self.fail("P001", f"expected ',' or '}}', found {self.cur.value!r}")
        return EnumDecl(name, tuple(values), self.loc(head))

    def context(self) -> ContextDecl:
        head = self.take()
        name = self.expect_name("context name")
        self.expect_word("as")
        out_type = self.type_ref()
        indices: list[TypedName] = []
        if self.at_ident("indexed"):
            self.take()
            if not self.at_ident("by"):
                self.fail("P004", "malformed 'indexed by' clause: expected 'by'")
            self.take()
            idx_name = self.expect_name("index name")
            if not self.at_ident("as"):
                self.fail("P004", "malformed 'indexed by' clause: expected 'as'")
            self.take()
            indices.append(TypedName(idx_name, self.type_ref()))
            if self.at_punct(","):
                self.fail("P004", "a context declares at most one output index")
        opener = self.open_block()
        inputs: list[InputBinding] = []
        uses: list[ActionUse] = []
        while not self.block_end(opener):
            if self.at_ident("source"):
                inputs.append(self.source_binding())
            elif self.at_ident("context"):
                self.take()
                inputs.append(ContextBinding(self.expect_name("context name")))
                self.expect_punct(";")
            elif self.at_ident("action"):
                # Ill-placed but parseable; the checker rejects it (E009).
                uses.append(self.action_use())
            else:
                self.fail("P001", f"expected a context input, found {self.cur.value!r}")
        decl = ContextDecl(name, out_type, tuple(indices), tuple(inputs), tuple(uses), self.loc(head))
        if not decl.inputs and not decl.action_uses:
            self.error("P005", f"context {name!r} declares no inputs", head)
        return decl

    def source_binding(self) -> SourceBinding:
        self.take()  # 'source'
        names = [self.expect_name("source name")]
        while self.at_punct(","):
            self.take()
            names.append(self.expect_name("source name"))
        self.expect_word("from")
        device = self.expect_name("device name")
        self.expect_punct(";")
        return SourceBinding(tuple(names), device)

    def action_use(self) -> ActionUse:
        self.take()  # 'action'
        action = self.expect_name("action name")
        self.expect_word("on")
        device = self.expect_name("device name")
        self.expect_punct(";")
        return ActionUse(action, device)

    def controller(self) -> ControllerDecl:
        head = self.take()
        name = self.expect_name("controller name")
        opener = self.open_block()
        ctx_inputs: list[str] = []
        uses: list[ActionUse] = []
        bindings: list[SourceBinding] = []
        while not self.block_end(opener):
            if self.at_ident("context"):
                self.take()
                ctx_inputs.append(self.expect_name("context name"))
                self.expect_punct(";")
            elif self.at_ident("action"):
                uses.append(self.action_use())
            elif self.at_ident("source"):
                # Ill-placed but parseable; the checker rejects it (E008).
                bindings.append(self.source_binding())
            else:
                self.fail("P001", f"expected a controller member, found {self.cur.value!r}")
        decl = ControllerDecl(name, tuple(ctx_inputs), tuple(uses), tuple(bindings), self.loc(head))
        if not (decl.context_inputs and decl.action_uses) and not decl.source_bindings:
            self.error(
                "P006",
                f"controller {name!r} must declare at least one context input and one action use",
                head,
            )
        return decl


def parse(files: list[tuple[str, str]]) -> tuple[SpecModel, list[Diagnostic]]:
    """Parse one or more source files into a single model with global namespaces."""
    units: list[SourceUnit] = []
    diags: list[Diagnostic] = []
    for path, text in files:
        toks, lex_diags = _lex(path, text)
        diags.extend(lex_diags)
        p = _Parser(path, toks, diags)
        units.append(p.parse_unit(text))
    return SpecModel(tuple(units)), diags


def parse_text(text: str, path: str = "<string>") -> tuple[SpecModel, list[Diagnostic]]:
    return parse([(path, text)])


# ---------------------------------------------------------------------------
# Discovery query text form: comma-separated `attr(predicate)` clauses.

class QuerySyntaxError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


_QUERY_OPS = {
    "eq": filters.Eq,
    "ne": filters.Ne,
    "lt": filters.Lt,
    "le": filters.Le,
    "gt": filters.Gt,
    "ge": filters.Ge,
}
_QUERY_COMBINATORS = {"or": filters.Or, "and": filters.And, "not": filters.Not}


class _QueryScanner:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def skip_ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def take(self) -> str:
        c = self.peek()
        if c:
            self.i += 1
        return c

    def atom(self) -> str:
        """A bare token: anything up to `(`, `)`, or `,`."""
        self.skip_ws()
        j = self.i
        while j < len(self.text) and self.text[j] not in "(),":
            j += 1
        atom = self.text[self.i:j].strip()
        self.i = j
        return atom


def _parse_predicate(s: _QueryScanner) -> filters.Predicate:
    word = s.atom()
    if not word:
        raise QuerySyntaxError("P010", "empty predicate")
    if s.peek() != "(":
        return filters.Eq(word)  # bare value is shorthand for eq
    s.take()  # '('
    if word in _QUERY_OPS:
        arg = s.atom()
        if s.peek() == "(" or not arg:
            raise QuerySyntaxError("P010", f"{word}() takes one plain value")
        if s.take() != ")":
            raise QuerySyntaxError("P010", f"missing ')' after {word}(...)")
        return _QUERY_OPS[word](arg)
    if word == "not":
        inner = _parse_predicate(s)
        if s.take() != ")":
            raise QuerySyntaxError("P010", "not(...) takes exactly one predicate")
        return filters.Not(inner)
    if word in ("or", "and"):
        left = _parse_predicate(s)
        if s.take() != ",":
            raise QuerySyntaxError("P010", f"{word}(...) takes exactly two predicates")
        right = _parse_predicate(s)
        if s.take() != ")":
            raise QuerySyntaxError("P010", f"missing ')' after {word}(...)")
        return _QUERY_COMBINATORS[word](left, right)
    raise QuerySyntaxError("P011", f"unknown operator {word!r}")


def parse_query(text: str) -> filters.FilterExpr:
    """Parse the textual filter form, e.g. `area(or(eq(room1),eq(room2))),size(gt(10))`.

    Leaf operands stay as raw strings; the runtime coerces them against the
    attribute's declared type at evaluation time.
    """
    if not text.strip():
        return filters.FilterExpr.empty()
    s = _QueryScanner(text)
    clauses: list[tuple[str, filters.Predicate]] = []
    while True:
        attr = s.atom()
        if not attr:
            raise QuerySyntaxError("P010", "expected attribute name")
        if s.take() != "(":
            raise QuerySyntaxError("P010", f"expected '(' after attribute {attr!r}")
        pred = _parse_predicate(s)
        if s.take() != ")":
            raise QuerySyntaxError("P010", f"missing ')' closing clause on {attr!r}")
        clauses.append((attr, pred))
        nxt = s.take()
        if nxt == "":
            break
        if nxt != ",":
            raise QuerySyntaxError("P010", f"expected ',' between clauses, found {nxt!r}")
    try:
        return filters.FilterExpr(tuple(clauses))
    except filters.FilterError as e:
        raise QuerySyntaxError("P010", str(e)) from None


# ---------------------------------------------------------------------------
# Pretty printer (canonical form; used for round-trip testing and fixtures)

def _typed(t: TypedName) -> str:
    return f"{t.name} as {t.type}"


def _indexed(indices: tuple[TypedName, ...]) -> str:
    if not indices:
        return ""
    return " indexed by " + ", ".join(_typed(i) for i in indices)


def pretty_print(model: SpecModel) -> str:
    out: list[str] = []
    for d in model.declarations:
        out.append(_print_decl(d))
    return "\n".join(out)


def _print_decl(d: Decl) -> str:
    if isinstance(d, DeviceDecl):
        head = f"device {d.name}"
        if d.parent:
            head += f" extends {d.parent}"
        lines = [head + " {"]
        for a in d.attributes:
            lines.append(f"  attribute {_typed(a)};")
        for s in d.sources:
            lines.append(f"  source {s.name} as {s.value_type}{_indexed(s.indices)};")
        for r in d.action_refs:
            lines.append(f"  action {r};")
        lines.append("}\n")
        return "\n".join(lines)
    if isinstance(d, ActionDecl):
        lines = [f"action {d.name} {{"]
        for m in d.methods:
            params = ", ".join(_typed(p) for p in m.params)
            lines.append(f"  {m.name}({params});")
        lines.append("}\n")
        return "\n".join(lines)
    if isinstance(d, StructDecl):
        lines = [f"structure {d.name} {{"]
        for f in d.fields:
            lines.append(f"  {_typed(f)};")
        lines.append("}\n")
        return "\n".join(lines)
    if isinstance(d, EnumDecl):
        return f"enumeration {d.name} {{{', '.join(d.values)}}}\n"
    if isinstance(d, ContextDecl):
        lines = [f"context {d.name} as {d.output_type}{_indexed(d.output_indices)} {{"]
        for b in d.inputs:
            if isinstance(b, SourceBinding):
                lines.append(f"  source {', '.join(b.source_names)} from {b.device_class};")
            else:
                lines.append(f"  context {b.context_name};")
        for u in d.action_uses:
            lines.append(f"  action {u.action} on {u.device_class};")
        lines.append("}\n")
        return "\n".join(lines)
    assert isinstance(d, ControllerDecl)
    lines = [f"controller {d.name} {{"]
    for c in d.context_inputs:
        lines.append(f"  context {c};")
    for u in d.action_uses:
        lines.append(f"  action {u.action} on {u.device_class};")
    for b in d.source_bindings:
        lines.append(f"  source {', '.join(b.source_names)} from {b.device_class};")
    lines.append("}\n")
    return "\n".join(lines)
