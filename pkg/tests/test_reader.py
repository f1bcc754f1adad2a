import random

import pytest

from dodona.errors import LexError, ParseError
from dodona.reader import (
    Const,
    ListForm,
    Sym,
    expand_sugar,
    parse,
    print_expr,
    read_source,
    tokenize,
)

from genprog import gen_int


def read1(src):
    forms = read_source(src)
    assert len(forms) == 1
    return forms[0]


def parse1(src):
    forms = parse(tokenize(src))
    assert len(forms) == 1
    return forms[0]


class TestAtoms:
    def test_booleans(self):
        assert read1("#t") == Const(True)
        assert read1("#f") == Const(False)

    def test_integers(self):
        assert read1("42") == Const(42)
        assert read1("-17") == Const(-17)
        assert read1("0") == Const(0)

    def test_symbols(self):
        assert read1("foo") == Sym("foo")
        assert read1("null?") == Sym("null?")
        assert read1("nat->digits") == Sym("nat->digits")
        assert read1("-") == Sym("-")

    def test_unknown_hash_literal(self):
        with pytest.raises(ParseError):
            read_source("#x")


class TestLists:
    def test_nested(self):
        assert read1("(+ 1 (f 2))") == ListForm(
            [Sym("+"), Const(1), ListForm([Sym("f"), Const(2)])]
        )

    def test_multiple_top_level_forms(self):
        assert len(read_source("1 2 (+ 1 2)")) == 3

    def test_comments_and_whitespace(self):
        assert read1("; leading\n ( +  1 ; mid\n 2 )\n") == ListForm(
            [Sym("+"), Const(1), Const(2)]
        )

    def test_quote_sugar(self):
        assert parse1("'x") == ListForm([Sym("quote"), Sym("x")])
        assert parse1("'(1 2)") == ListForm(
            [Sym("quote"), ListForm([Const(1), Const(2)])]
        )
        assert parse1("''x") == ListForm(
            [Sym("quote"), ListForm([Sym("quote"), Sym("x")])]
        )


class TestErrors:
    @pytest.mark.parametrize("ch", list('"`,[]{}\\|'))
    def test_illegal_characters(self, ch):
        with pytest.raises(LexError):
            tokenize(f"(a {ch} b)")

    @pytest.mark.parametrize("src", ["(", ")", "(a (b)", "'", "(')"])
    def test_unbalanced(self, src):
        with pytest.raises(ParseError):
            parse(tokenize(src))

    @pytest.mark.parametrize(
        "src",
        [
            "()",
            "(if 1 2)",
            "(lambda x x)",
            "(lambda (1) x)",
            "(choose 1 2)",
            "(quote)",
            "(define x)",
            "(let ((x)) x)",
            "(+ 1 (define y 2))",
        ],
    )
    def test_validation(self, src):
        with pytest.raises(ParseError):
            read_source(src)

    def test_define_only_top_level(self):
        read_source("(define x 1)")  # fine
        with pytest.raises(ParseError):
            read_source("(if #t (define x 1) 2)")


class TestSugar:
    def test_let(self):
        assert read1("(let ((x 1)) x)") == read1("((lambda (x) x) 1)")

    def test_let_multiple_parallel(self):
        assert read1("(let ((x 1) (y 2)) (+ x y))") == read1(
            "((lambda (x y) (+ x y)) 1 2)"
        )

    def test_let_star_is_nested(self):
        assert read1("(let* ((x 1) (y x)) y)") == read1(
            "((lambda (x) ((lambda (y) y) x)) 1)"
        )

    def test_define_function_form(self):
        assert read1("(define (f a b) (+ a b))") == read1(
            "(define f (lambda (a b) (+ a b)))"
        )

    def test_sugar_not_expanded_inside_quote(self):
        e = read1("'(let ((x 1)) x)")
        assert print_expr(e) == "'(let ((x 1)) x)"

    def test_idempotent(self):
        rng = random.Random(11)
        for _ in range(50):
            e = read1(gen_int(rng, 4, []))
            assert expand_sugar(e) == e


class TestPrinting:
    def test_round_trip_fixed(self):
        for src in [
            "(+ 1 2)",
            "'(a b (c))",
            "(lambda (x) (if #t x -3))",
            "(choose '(#f #t))",
        ]:
            assert print_expr(read1(src)) == src

    def test_round_trip_random(self):
        rng = random.Random(5)
        for _ in range(100):
            e = read1(gen_int(rng, 4, []))
            printed = print_expr(e)
            assert read1(printed) == e
            assert print_expr(read1(printed)) == printed


class TestFuzz:
    def test_reader_never_panics(self):
        rng = random.Random(99)
        alphabet = "()'#tf0123456789abc +-*;\n\"[]`"
        for _ in range(500):
            src = "".join(
                rng.choice(alphabet) for _ in range(rng.randrange(1, 40))
            )
            try:
                read_source(src)
            except (LexError, ParseError):
                pass
