import json

import pytest

from dodona.errors import GraphTooLargeError
from dodona.graph import (
    EDGE_TYPES,
    RESERVED_TOKENS,
    ChoiceGraph,
    build_choicepoint_graph,
    decode_choice_tokens,
    free_symbols,
    reachable_undirected,
)
from dodona.interp import Choicepoint, StepBudget, load_forms, run_deterministic, step
from dodona.reader import read_source
from dodona.suite import base_env
from dodona.values import make_global_env, print_value

GOLDEN = "(let ((x 0)) (+ x (let ((x 2)) (if (choose-bool) x 1)) x))"


def cp_of(src: str, env=None):
    env = env if env is not None else make_global_env()
    forms = read_source(src)
    for form in forms[:-1]:
        run_deterministic(form, env)
    r = step(forms[-1], env, 0, None, StepBudget())
    assert isinstance(r, Choicepoint)
    return r


class TestGolden:
    def test_golden_graph(self):
        g = build_choicepoint_graph(cp_of(GOLDEN, base_env()))
        assert len(g.nodes) == 17
        assert len(g.choice_node_ids) == 2
        # the int 0 is referenced twice (x twice in the + template) but
        # embedded once
        assert g.nodes.count("INT") == 3  # 0, 1, 2
        # two distinct bindings of x (inner 2, outer 0): one name node each
        assert g.nodes.count("x") == 2
        assert sum(1 for _, _, t in g.edges if t == "SYMBOL-BINDING") == 2
        assert decode_choice_tokens(g.to_json_obj()) == ["#f", "#t"]
        assert reachable_undirected(g) == set(range(len(g.nodes)))

    def test_minimal_choicepoint_is_three_nodes(self):
        # single choice 5, empty continuation: CHOICE, INT, digit
        g = build_choicepoint_graph(cp_of("(choose '(5))"))
        assert len(g.nodes) == 3
        assert sorted(g.nodes) == ["5", "CHOICE", "INT"]
        assert g.root_id == g.nodes.index("CHOICE")
        assert decode_choice_tokens(g.to_json_obj()) == ["5"]


class TestInvariants:
    PROGRAMS = [
        "(choose '(1 2 3))",
        "(+ 1 (choose '(10 -27)))",
        "(choose (list (set-of 1 2) (map-of 'a 1)))",
        "(let ((f (lambda (n) (* n n)))) (f (choose '(1 2))))",
        "(if (= (choose '(a b c)) 'b) 1 2)",
        "(length (cons (choose '(#t #f)) '(#t)))",
    ]

    @pytest.mark.parametrize("src", PROGRAMS)
    def test_choice_count_and_reachability(self, src):
        cp = cp_of(src)
        g = build_choicepoint_graph(cp)
        assert len(g.choice_node_ids) == len(cp.choices)
        assert reachable_undirected(g) == set(range(len(g.nodes)))

    @pytest.mark.parametrize("src", PROGRAMS)
    def test_vocabulary(self, src):
        g = build_choicepoint_graph(cp_of(src))
        for _, _, t in g.edges:
            assert t in EDGE_TYPES
        for s, d, _ in g.edges:
            assert 0 <= s < len(g.nodes) and 0 <= d < len(g.nodes)

    @pytest.mark.parametrize("src", PROGRAMS)
    def test_byte_deterministic(self, src):
        g1 = build_choicepoint_graph(cp_of(src))
        g2 = build_choicepoint_graph(cp_of(src))
        assert g1.to_json() == g2.to_json()

    @pytest.mark.parametrize("src", PROGRAMS)
    def test_json_round_trip(self, src):
        g = build_choicepoint_graph(cp_of(src))
        g2 = ChoiceGraph.from_json_obj(json.loads(g.to_json()))
        assert g2.to_json() == g.to_json()

    def test_losslessness_on_varied_choices(self):
        cp = cp_of("(choose (list 0 42 -7 1234 #t #f 'sym '() '(1 (2 3)) (set-of 2 1)))")
        g = build_choicepoint_graph(cp)
        assert decode_choice_tokens(g.to_json_obj()) == [
            print_value(c) for c in cp.choices
        ]


class TestPermutationInvariance:
    @staticmethod
    def _graphs(perms):
        # the container is constructed before the choicepoint, so it is
        # embedded as a value (canonical order), not as pending source
        return {
            build_choicepoint_graph(
                cp_of(f"(let ((s {p})) (if (choose-bool) s s))", base_env())
            ).to_json()
            for p in perms
        }

    def test_sets(self):
        assert (
            len(self._graphs(["(set-of 1 2 3)", "(set-of 3 1 2)", "(set-of 2 3 1 1)"]))
            == 1
        )

    def test_maps(self):
        assert (
            len(
                self._graphs(
                    [
                        "(map-of 'a 1 'b 2 'c 3)",
                        "(map-of 'c 3 'a 1 'b 2)",
                        "(map-of 'b 2 'c 3 'a 1)",
                    ]
                )
            )
            == 1
        )

    def test_nested_containers_size_4(self):
        assert (
            len(
                self._graphs(
                    [
                        "(set-of (set-of 1 2) (set-of 3 4) 5 6)",
                        "(set-of 6 (set-of 4 3) 5 (set-of 2 1))",
                    ]
                )
            )
            == 1
        )


class TestMemoization:
    def test_shared_value_embedded_once(self):
        # the same list value bound twice in scope appears as one CONS chain
        cp = cp_of(
            "(let ((a '(7 8)) (b '(7 8)))"
            " (if (choose-bool) (cons (first a) b) a))",
            base_env(),
        )
        g = build_choicepoint_graph(cp)
        # two structurally equal but distinct lists: embedded separately
        # (structured values memoize by identity)
        assert g.nodes.count("CONS") == 4

    def test_same_identity_embedded_once(self):
        cp = cp_of(
            "(let ((a '(7 8))) (if (choose-bool) (cons (first a) a) a))",
            base_env(),
        )
        g = build_choicepoint_graph(cp)
        assert g.nodes.count("CONS") == 2

    def test_symbol_reference_single_binding_node(self):
        cp = cp_of("(let ((x 3)) (+ x (choose '(1 2)) x x))", base_env())
        g = build_choicepoint_graph(cp)
        assert g.nodes.count("x") == 1
        assert sum(1 for _, _, t in g.edges if t == "SYMBOL-BINDING") == 1

    def test_recursive_closure_safe(self):
        env = base_env()
        load_forms(read_source("(define (loop n) (loop n))"), env)
        cp = cp_of("(if (choose-bool) loop loop)", env)
        g = build_choicepoint_graph(cp)  # must terminate
        assert "FN-SUMMARY" in g.nodes


class TestGuard:
    def test_oversize_graph_rejected(self):
        cp = cp_of("(choose '(1 2 3 4 5 6 7 8 9 10 11 12 13))")
        with pytest.raises(GraphTooLargeError):
            build_choicepoint_graph(cp, max_nodes=5)


class TestFreeSymbols:
    def test_free_symbols(self):
        e = read_source("(lambda (x) (+ x y (quote z)))")[0]
        names = {s.name for s in free_symbols(e)}
        assert names == {"+", "y"}
