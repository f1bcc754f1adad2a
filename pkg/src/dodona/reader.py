"""S-expression reader for `.dd` sources.

Tokenizes and parses source text into `Expr` trees and expands the surface
sugar (`let`, `let*`, function-style `define`) down to the core grammar:
constants, symbols, `(choose e)`, `(lambda (x ...) e)`, `(if c t e)`,
`(define x e)`, `(quote e)`, and application.
"""

from __future__ import annotations

import re

from .errors import LexError, ParseError, SourceSpan

# ---------------------------------------------------------------------------
# Expressions


class Expr:
    __slots__ = ("span",)


class Const(Expr):
    """A literal constant. `value` is a runtime value (bool, int, or any
    value spliced in by the interpreter while building templates)."""

    __slots__ = ("value",)

    def __init__(self, value, span=None):
        self.value = value
        self.span = span

    def __eq__(self, other):
        return isinstance(other, Const) and const_eq(self.value, other.value)

    def __hash__(self):
        return hash(("Const", id(type(self.value))))

    def __repr__(self):
        return f"Const({self.value!r})"


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str, span=None):
        self.name = name
        self.span = span

    def __eq__(self, other):
        return isinstance(other, Sym) and self.name == other.name

    def __hash__(self):
        return hash(("Sym", self.name))

    def __repr__(self):
        return f"Sym({self.name})"


class ListForm(Expr):
    __slots__ = ("items",)

    def __init__(self, items, span=None):
        self.items = tuple(items)
        self.span = span

    def __eq__(self, other):
        return isinstance(other, ListForm) and self.items == other.items

    def __hash__(self):
        return hash(("ListForm", self.items))

    def __repr__(self):
        return f"ListForm({list(self.items)!r})"


class _Hole(Expr):
    """The distinguished continuation-template placeholder. Never appears
    in user source; introduced by the interpreter when building segments."""

    __slots__ = ()

    def __init__(self):
        self.span = None

    def __repr__(self):
        return "Hole"


HOLE = _Hole()


def const_eq(a, b):
    # Deferred import: Const may wrap interpreter values.
    from .values import values_equal

    return values_equal(a, b)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"[()']|[^()'\s;]+")
_INT_RE = re.compile(r"-?[0-9]+\Z")
_ILLEGAL_CHARS = set('"`,[]{}\\|')


class Token:
    __slots__ = ("text", "span")

    def __init__(self, text: str, span: SourceSpan):
        self.text = text
        self.span = span

    def __repr__(self):
        return f"Token({self.text!r})"


def tokenize(text: str) -> list[Token]:
    """Split source into parens, quote marks, and atoms; `;` comments and
    whitespace are skipped."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c in _ILLEGAL_CHARS:
            raise LexError(f"illegal character {c!r}", SourceSpan(i, i + 1))
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise LexError(f"illegal character {c!r}", SourceSpan(i, i + 1))
        word = m.group(0)
        for k, ch in enumerate(word):
            if ch in _ILLEGAL_CHARS:
                raise LexError(f"illegal character {ch!r}", SourceSpan(i + k, i + k + 1))
        tokens.append(Token(word, SourceSpan(i, m.end())))
        i = m.end()
    return tokens


# ---------------------------------------------------------------------------
# Parser


def _atom(tok: Token) -> Expr:
    t = tok.text
    if t == "#t":
        return Const(True, tok.span)
    if t == "#f":
        return Const(False, tok.span)
    if _INT_RE.match(t):
        return Const(int(t), tok.span)
    if t.startswith("#"):
        raise ParseError(f"unknown hash literal {t!r}", tok.span)
    return Sym(t, tok.span)


def parse(tokens: list[Token]) -> list[Expr]:
    """Parse a token sequence into a sequence of top-level expressions.
    `'e` reads as `(quote e)`."""
    pos = 0

    def read() -> Expr:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError("unbalanced parenthesis", tok.span)
                if tokens[pos].text == ")":
                    end = tokens[pos].span.end
                    pos += 1
                    return ListForm(items, SourceSpan(tok.span.start, end))
                items.append(read())
        if tok.text == ")":
            raise ParseError("unbalanced parenthesis", tok.span)
        if tok.text == "'":
            if pos >= len(tokens) or tokens[pos].text == ")":
                raise ParseError("dangling quote", tok.span)
            inner = read()
            end = inner.span.end if inner.span else tok.span.end
            return ListForm(
                [Sym("quote", tok.span), inner], SourceSpan(tok.span.start, end)
            )
        return _atom(tok)

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def read_source(text: str) -> list[Expr]:
    """tokenize + parse + expand-sugar + validate, in one call."""
    forms = [expand_sugar(e) for e in parse(tokenize(text))]
    for form in forms:
        validate(form, top_level=True)
    return forms


# ---------------------------------------------------------------------------
# Sugar expansion

_CORE_HEADS = {"choose", "lambda", "if", "define", "quote"}


def _binding_pairs(e: Expr, what: str):
    if not isinstance(e, ListForm):
        raise ParseError(f"malformed {what} binding list", e.span)
    pairs = []
    for b in e.items:
        if (
            not isinstance(b, ListForm)
            or len(b.items) != 2
            or not isinstance(b.items[0], Sym)
        ):
            raise ParseError(f"malformed {what} binding", b.span)
        pairs.append((b.items[0], b.items[1]))
    return pairs


def expand_sugar(e: Expr) -> Expr:
    """Rewrite `let`/`let*`/function-style `define` into the core grammar.
    Recursive and idempotent; does not descend into `quote`."""
    if not isinstance(e, ListForm) or not e.items:
        return e
    head = e.items[0]
    if isinstance(head, Sym):
        if head.name == "quote":
            return e
        if head.name == "let":
            if len(e.items) != 3:
                raise ParseError("let expects (let (bindings) body)", e.span)
            pairs = _binding_pairs(e.items[1], "let")
            params = [name for name, _ in pairs]
            args = [expand_sugar(v) for _, v in pairs]
            body = expand_sugar(e.items[2])
            lam = ListForm([Sym("lambda"), ListForm(params), body], e.span)
            return ListForm([lam] + args, e.span)
        if head.name == "let*":
            if len(e.items) != 3:
                raise ParseError("let* expects (let* (bindings) body)", e.span)
            pairs = _binding_pairs(e.items[1], "let*")
            body = e.items[2]
            for name, v in reversed(pairs):
                body = ListForm(
                    [Sym("let"), ListForm([ListForm([name, v])]), body], e.span
                )
            return expand_sugar(body)
        if head.name == "define" and len(e.items) == 3 and isinstance(
            e.items[1], ListForm
        ):
            # (define (f a ...) b) -> (define f (lambda (a ...) b))
            sig = e.items[1]
            if not sig.items or not all(isinstance(s, Sym) for s in sig.items):
                raise ParseError("malformed define signature", sig.span)
            lam = ListForm([Sym("lambda"), ListForm(sig.items[1:]), e.items[2]], e.span)
            return ListForm([Sym("define"), sig.items[0], expand_sugar(lam)], e.span)
    return ListForm([expand_sugar(x) for x in e.items], e.span)


def validate(e: Expr, top_level: bool = False) -> None:
    """Check special-form shapes on the post-sugar core grammar; `define`
    is only legal at top level."""
    if not isinstance(e, ListForm):
        return
    if not e.items:
        raise ParseError("empty application ()", e.span)
    head = e.items[0]
    if isinstance(head, Sym) and head.name in _CORE_HEADS:
        name = head.name
        if name == "quote":
            if len(e.items) != 2:
                raise ParseError("quote expects one argument", e.span)
            return
        if name == "choose":
            if len(e.items) != 2:
                raise ParseError("choose expects one argument", e.span)
            validate(e.items[1])
            return
        if name == "if":
            if len(e.items) != 4:
                raise ParseError("if expects (if c t e)", e.span)
            for x in e.items[1:]:
                validate(x)
            return
        if name == "lambda":
            if len(e.items) != 3 or not isinstance(e.items[1], ListForm):
                raise ParseError("lambda expects (lambda (params) body)", e.span)
            for p in e.items[1].items:
                if not isinstance(p, Sym):
                    raise ParseError("lambda parameter must be a symbol", p.span)
            validate(e.items[2])
            return
        if name == "define":
            if not top_level:
                raise ParseError("define is only legal at top level", e.span)
            if len(e.items) != 3 or not isinstance(e.items[1], Sym):
                raise ParseError("define expects (define name expr)", e.span)
            validate(e.items[2])
            return
    for x in e.items:
        validate(x)


# ---------------------------------------------------------------------------
# Printing


def print_expr(e: Expr) -> str:
    if isinstance(e, _Hole):
        return "◦"  # ◦
    if isinstance(e, Const):
        from .values import print_value

        return print_value(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, ListForm):
        if (
            len(e.items) == 2
            and isinstance(e.items[0], Sym)
            and e.items[0].name == "quote"
        ):
            return "'" + print_expr(e.items[1])
        return "(" + " ".join(print_expr(x) for x in e.items) + ")"
    raise TypeError(f"not an Expr: {e!r}")
