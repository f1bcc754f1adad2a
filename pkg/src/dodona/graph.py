"""Lossless prompt graphs for choicepoints.

Every node carries a single token; typed directed edges point from
sub-structure into the node that summarizes it. Values referenced from
several places are embedded once (memoized); environments contribute only
the bindings actually referenced free by a segment template.
"""

from __future__ import annotations

import json

from .errors import GraphTooLargeError
from .interp import Choicepoint, Segment, expr_to_value, fill_hole
from .reader import Const, Expr, ListForm, Sym, _Hole
from .values import (
    NIL,
    Closure,
    Env,
    MapValue,
    Pair,
    Primitive,
    SetValue,
    Symbol,
    _Nil,
)

VOCAB_VERSION = "1"

EDGE_TYPES = [
    "APP-FN",
    "APP-ARG",
    "ARG-NEXT",
    "IF-COND",
    "IF-THEN",
    "IF-ELSE",
    "LAMBDA-PARAM",
    "LAMBDA-BODY",
    "CLOSURE-ENV",
    "CONS-HEAD",
    "CONS-TAIL",
    "SET-ELEM",
    "MAP-KEY",
    "MAP-VAL",
    "MAP-ENTRY",
    "SYMBOL-BINDING",
    "CHOICE-OPTION",
    "SEGMENT-RESULT",
    "VALUE-SUMMARY",
    "QUOTED",
]

RESERVED_TOKENS = [
    "CHOICE",
    "FN-SUMMARY",
    "APP",
    "IF",
    "LAMBDA",
    "CONS",
    "NIL",
    "SET",
    "MAP",
    "PAIR-ENTRY",
    "HOLE",
    "INT",
    "INT-SIGN",
    "CHOOSE",
    "DEFINE",
    "QUOTE",
    "EVALUATED",
    "PENDING",
    "#t",
    "#f",
] + [str(d) for d in range(10)]

DEFAULT_MAX_NODES = 20_000


class ChoiceGraph:
    __slots__ = ("nodes", "edges", "choice_node_ids", "root_id")

    def __init__(self, nodes, edges, choice_node_ids, root_id):
        self.nodes = nodes  # list[str] token per id
        self.edges = edges  # sorted list[(src, dst, type-name)]
        self.choice_node_ids = choice_node_ids
        self.root_id = root_id

    def to_json_obj(self) -> dict:
        return {
            "nodes": self.nodes,
            "edges": [list(e) for e in self.edges],
            "choices": self.choice_node_ids,
            "root": self.root_id,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ChoiceGraph":
        return cls(
            list(obj["nodes"]),
            [tuple(e) for e in obj["edges"]],
            list(obj["choices"]),
            obj["root"],
        )


class NodeRef(Expr):
    """An already-embedded graph node spliced into a template."""

    __slots__ = ("node_id",)

    def __init__(self, node_id: int):
        self.node_id = node_id
        self.span = None

    def __repr__(self):
        return f"NodeRef({self.node_id})"


class _Builder:
    def __init__(self, max_nodes=DEFAULT_MAX_NODES):
        self.tokens: list[str] = []
        self.edges: set[tuple[int, int, str]] = set()
        self.memo: dict = {}
        # values memoized by identity must stay alive for the whole build,
        # or a freed temporary's id could be reused and alias its node
        self.pins: list = []
        self.max_nodes = max_nodes

    def node(self, token: str) -> int:
        if len(self.tokens) >= self.max_nodes:
            raise GraphTooLargeError(
                f"choicepoint graph exceeds {self.max_nodes} nodes"
            )
        self.tokens.append(token)
        return len(self.tokens) - 1

    def edge(self, src: int, dst: int, etype: str):
        assert etype in _EDGE_SET
        self.edges.add((src, dst, etype))


_EDGE_SET = set(EDGE_TYPES)


def _memo_key(v):
    t = type(v)
    if t is bool:
        return ("b", v)
    if t is int:
        return ("i", v)
    if t is Symbol:
        return ("s", v.name)
    if t is _Nil:
        return ("nil",)
    if t is Primitive:
        return ("prim", v.name)
    return ("obj", id(v))


def free_symbols(e: Expr, bound: frozenset = frozenset()) -> set[Symbol]:
    """Free symbol occurrences of an expression (post-sugar core grammar);
    special-form keywords and quoted data do not count."""
    out: set[Symbol] = set()
    _free(e, bound, out)
    return out


def _free(e, bound, out):
    if isinstance(e, Sym):
        s = Symbol(e.name)
        if s not in bound:
            out.add(s)
        return
    if not isinstance(e, ListForm) or not e.items:
        return
    head = e.items[0]
    name = head.name if isinstance(head, Sym) else None
    if name == "quote":
        return
    if name == "lambda":
        inner = bound | {Symbol(p.name) for p in e.items[1].items}
        _free(e.items[2], inner, out)
        return
    if name == "if" or name == "choose":
        for x in e.items[1:]:
            _free(x, bound, out)
        return
    if name == "define":
        _free(e.items[2], bound, out)
        return
    for x in e.items:
        _free(x, bound, out)


def embed_value(b: _Builder, v) -> int:
    """Embed a runtime value; returns its summary node id. Memoized per
    graph, cycle-safe for recursive closures."""
    key = _memo_key(v)
    hit = b.memo.get(key)
    if hit is not None:
        return hit
    if key[0] == "obj":
        b.pins.append(v)
    t = type(v)
    if t is bool:
        nid = b.node("#t" if v else "#f")
    elif t is int:
        nid = b.node("INT")
        b.memo[key] = nid
        chain = []
        if v < 0:
            chain.append(b.node("INT-SIGN"))
        for d in str(abs(v)):
            chain.append(b.node(d))
        for cn in chain:
            b.edge(cn, nid, "VALUE-SUMMARY")
        for a, c in zip(chain, chain[1:]):
            b.edge(a, c, "ARG-NEXT")
        return nid
    elif t is Symbol:
        nid = b.node(v.name)
    elif t is _Nil:
        nid = b.node("NIL")
    elif t is Primitive:
        nid = b.node(f"<prim:{v.name}>")
    elif t is Pair:
        nid = b.node("CONS")
        b.memo[key] = nid
        b.edge(embed_value(b, v.head), nid, "CONS-HEAD")
        b.edge(embed_value(b, v.tail), nid, "CONS-TAIL")
        return nid
    elif t is SetValue:
        nid = b.node("SET")
        b.memo[key] = nid
        for e in v.elements:
            b.edge(embed_value(b, e), nid, "SET-ELEM")
        return nid
    elif t is MapValue:
        nid = b.node("MAP")
        b.memo[key] = nid
        for k, x in v.entries:
            entry = b.node("PAIR-ENTRY")
            b.edge(embed_value(b, k), entry, "MAP-KEY")
            b.edge(embed_value(b, x), entry, "MAP-VAL")
            b.edge(entry, nid, "MAP-ENTRY")
        return nid
    elif t is Closure:
        nid = b.node("FN-SUMMARY")
        b.memo[key] = nid
        bound = {}
        for p in v.params:
            pn = b.node(p.name)
            b.edge(pn, nid, "LAMBDA-PARAM")
            bound[p] = pn
        body_id = embed_expr(b, v.body, v.env, 0, bound)
        b.edge(body_id, nid, "LAMBDA-BODY")
        # captured symbols actually referenced free in the body
        for s in sorted(
            free_symbols(v.body, frozenset(v.params)), key=lambda s: s.name
        ):
            if v.env.bound_here_or_above(s):
                b.edge(embed_value(b, v.env.lookup(s)), nid, "CLOSURE-ENV")
        return nid
    else:
        raise TypeError(f"cannot embed {v!r}")
    b.memo[key] = nid
    return nid


def _embed_symbol_ref(b: _Builder, name: str, env: Env) -> int:
    """A free symbol occurrence: resolves through the environment and
    returns the *value* node; a name node records the binding."""
    value = env.lookup(Symbol(name))
    vid = embed_value(b, value)
    ref_key = ("symref", name, vid)
    if ref_key not in b.memo:
        sym_node = b.node(name)
        b.edge(sym_node, vid, "SYMBOL-BINDING")
        b.memo[ref_key] = sym_node
    return vid


def embed_expr(b: _Builder, e: Expr, env: Env, count: int, bound: dict) -> int:
    """Embed an expression (which may contain NodeRef splices) in `env`;
    `count` is the evaluated-argument count of the top-level form, encoded
    as EVALUATED/PENDING markers on application argument positions.
    `bound` maps locally bound symbols to their binder nodes."""
    if isinstance(e, NodeRef):
        return e.node_id
    if isinstance(e, _Hole):
        return b.node("HOLE")
    if isinstance(e, Const):
        return embed_value(b, e.value)
    if isinstance(e, Sym):
        s = Symbol(e.name)
        if s in bound:
            return bound[s]
        return _embed_symbol_ref(b, e.name, env)
    assert isinstance(e, ListForm) and e.items
    head = e.items[0]
    name = head.name if isinstance(head, Sym) else None
    if name == "quote":
        nid = b.node("QUOTE")
        b.edge(embed_value(b, expr_to_value(e.items[1])), nid, "QUOTED")
        return nid
    if name == "if":
        nid = b.node("IF")
        b.edge(embed_expr(b, e.items[1], env, 0, bound), nid, "IF-COND")
        b.edge(embed_expr(b, e.items[2], env, 0, bound), nid, "IF-THEN")
        b.edge(embed_expr(b, e.items[3], env, 0, bound), nid, "IF-ELSE")
        return nid
    if name == "lambda":
        nid = b.node("LAMBDA")
        inner = dict(bound)
        for p in e.items[1].items:
            pn = b.node(p.name)
            b.edge(pn, nid, "LAMBDA-PARAM")
            inner[Symbol(p.name)] = pn
        b.edge(embed_expr(b, e.items[2], env, 0, inner), nid, "LAMBDA-BODY")
        return nid
    if name == "choose":
        nid = b.node("CHOOSE")
        b.edge(embed_expr(b, e.items[1], env, 0, bound), nid, "APP-ARG")
        return nid
    if name == "define":
        nid = b.node("DEFINE")
        b.edge(b.node(e.items[1].name), nid, "LAMBDA-PARAM")
        b.edge(embed_expr(b, e.items[2], env, 0, bound), nid, "LAMBDA-BODY")
        return nid
    # application: fn plus marker-chained argument positions
    nid = b.node("APP")
    b.edge(embed_expr(b, e.items[0], env, 0, bound), nid, "APP-FN")
    prev_marker = None
    for j, arg in enumerate(e.items[1:], start=1):
        marker = b.node("EVALUATED" if j <= count - 1 else "PENDING")
        b.edge(embed_expr(b, arg, env, 0, bound), marker, "APP-ARG")
        b.edge(marker, nid, "APP-ARG")
        if prev_marker is not None:
            b.edge(prev_marker, marker, "ARG-NEXT")
        prev_marker = marker
    return nid


def build_choicepoint_graph(
    cp: Choicepoint, max_nodes: int = DEFAULT_MAX_NODES
) -> ChoiceGraph:
    """Embed choices under a CHOICE node, then fold the CHOICE node
    through the segment stack, top (innermost) first."""
    b = _Builder(max_nodes)
    choice_node = b.node("CHOICE")
    choice_ids = []
    for c in cp.choices:
        cid = embed_value(b, c)
        b.edge(cid, choice_node, "CHOICE-OPTION")
        choice_ids.append(cid)
    current = choice_node
    for seg in cp.segments:
        filled = fill_hole(seg.template, NodeRef(current))
        summary = embed_expr(b, filled, seg.env, seg.count, {})
        b.edge(current, summary, "SEGMENT-RESULT")
        current = summary
    edges = sorted(b.edges)
    return ChoiceGraph(b.tokens, edges, choice_ids, current)


def reachable_undirected(g: ChoiceGraph) -> set[int]:
    adj: dict[int, list[int]] = {i: [] for i in range(len(g.nodes))}
    for s, d, _ in g.edges:
        adj[s].append(d)
        adj[d].append(s)
    seen = {g.root_id}
    stack = [g.root_id]
    while stack:
        for m in adj[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def decode_choice_tokens(obj: dict) -> list[str]:
    """Reconstruct the printed choices from a serialized graph (the
    losslessness check used by tests)."""
    g = ChoiceGraph.from_json_obj(obj)
    incoming: dict[tuple[int, str], list[int]] = {}
    for s, d, t in g.edges:
        incoming.setdefault((d, t), []).append(s)

    def render(nid: int) -> str:
        tok = g.nodes[nid]
        if tok == "INT":
            chain = set(incoming.get((nid, "VALUE-SUMMARY"), []))
            nxt = {}
            targets = set()
            for s2, d2, t2 in g.edges:
                if t2 == "ARG-NEXT" and s2 in chain and d2 in chain:
                    nxt[s2] = d2
                    targets.add(d2)
            heads = chain - targets
            head = next(iter(heads)) if heads else None
            digits = []
            while head is not None:
                digits.append(g.nodes[head])
                head = nxt.get(head)
            sign = "-" if digits and digits[0] == "INT-SIGN" else ""
            if sign:
                digits = digits[1:]
            return sign + "".join(digits)
        if tok == "CONS":
            head = incoming[(nid, "CONS-HEAD")][0]
            tail = incoming[(nid, "CONS-TAIL")][0]
            parts = [render(head)]
            while g.nodes[tail] == "CONS":
                parts.append(render(incoming[(tail, "CONS-HEAD")][0]))
                tail = incoming[(tail, "CONS-TAIL")][0]
            if g.nodes[tail] == "NIL":
                return "(" + " ".join(parts) + ")"
            return "(" + " ".join(parts) + " . " + render(tail) + ")"
        if tok == "NIL":
            return "()"
        if tok == "SET":
            elems = sorted(render(s) for s in incoming.get((nid, "SET-ELEM"), []))
            return "#set(" + " ".join(elems) + ")"
        if tok == "MAP":
            entries = []
            for en in incoming.get((nid, "MAP-ENTRY"), []):
                k = render(incoming[(en, "MAP-KEY")][0])
                v = render(incoming[(en, "MAP-VAL")][0])
                entries.append(f"({k} {v})")
            return "#map(" + " ".join(sorted(entries)) + ")"
        return tok  # bools, symbols, primitives, FN-SUMMARY

    return [render(c) for c in g.choice_node_ids]
