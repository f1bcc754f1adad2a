"""The eight task families.

A predict-app task is a `.dd` snippet defining three entry points:

    (task-gen)        nondeterministic, returns a (fn arg) pair
    (task-output)     nondeterministic, covers every reachable target
    (task-invert v)   returns the choice labels driving task-output to v

Planted-path tasks instead define a walker over an encoded binary tree;
episodes and labels come from the per-task PRNG stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

FAMILIES = [
    "identity",
    "arithmetic",
    "lists",
    "trees",
    "polynomials",
    "fo-simplify",
    "ho-reduce",
    "planted-path",
]


@dataclass
class TaskSpec:
    task_id: str
    family: str
    kind: str  # "predict-app" | "planted"
    source: str = ""
    params: dict = field(default_factory=dict)


def _pa(task_id, family, source):
    return TaskSpec(task_id, family, "predict-app", source)


def _output_defs(output_expr, invert_body):
    return f"(define (task-output) {output_expr})\n(define (task-invert v) {invert_body})\n"


_OUT_BOOL = _output_defs("(choose-bool)", "(invert-bool v)")
_OUT_DIGIT = _output_defs("(choose-digit)", "(invert-digit v)")
_OUT_NAT = _output_defs("(choose-nat)", "(invert-nat v)")
_OUT_INT = _output_defs("(choose-int)", "(invert-int v)")
_OUT_DIGIT_LIST = _output_defs(
    "(choose-list choose-digit)", "(invert-list invert-digit v)"
)
_OUT_BOOL_LIST = _output_defs(
    "(choose-list choose-bool)", "(invert-list invert-bool v)"
)
_OUT_NAT_LIST = _output_defs("(choose-list choose-nat)", "(invert-list invert-nat v)")


def _out_tree(leaf_chooser, leaf_inverter, opts):
    return _output_defs(
        f"(choose-tree-of {leaf_chooser} '{opts})",
        f"(invert-tree {leaf_inverter} '{opts} v)",
    )


def identity_tasks():
    def task(name, arg, out):
        src = f"(define (ident x) x)\n(define (task-gen) (list ident {arg}))\n{out}"
        return _pa(f"identity-{name}", "identity", src)

    return [
        task("bool", "(choose-bool)", _OUT_BOOL),
        task("digit", "(choose-digit)", _OUT_DIGIT),
        task("list-digit", "(choose-list choose-digit)", _OUT_DIGIT_LIST),
        task("list-bool", "(choose-list choose-bool)", _OUT_BOOL_LIST),
        task(
            "tree-digit",
            "(choose-tree-of choose-digit '((f 2)))",
            _out_tree("choose-digit", "invert-digit", "((f 2))"),
        ),
    ]


def arithmetic_tasks():
    def task(name, nargs, body, out):
        src = (
            f"(define (task-fn xs) {body})\n"
            f"(define (task-gen) (list task-fn (choose-fixed-list {nargs} choose-digit)))\n"
            f"{out}"
        )
        return _pa(f"arith-{name}", "arithmetic", src)

    a, b, c = "(nth 0 xs)", "(nth 1 xs)", "(nth 2 xs)"
    return [
        task("add", 2, f"(+ {a} {b})", _OUT_NAT),
        task("sub", 2, f"(- {a} {b})", _OUT_INT),
        task("mul", 2, f"(* {a} {b})", _OUT_NAT),
        task("max", 2, f"(max {a} {b})", _OUT_NAT),
        task("min", 2, f"(min {a} {b})", _OUT_NAT),
        task("add-mul", 3, f"(+ {a} (* {b} {c}))", _OUT_NAT),
        task("div", 2, f"(/ {a} (+ {b} 1))", _OUT_NAT),
        task("rem", 2, f"(remainder {a} (+ {b} 1))", _OUT_NAT),
    ]


def list_tasks():
    def task(name, body, out, arg="(choose-list choose-digit)"):
        src = (
            f"(define (task-fn xs) {body})\n"
            f"(define (task-gen) (list task-fn {arg}))\n{out}"
        )
        return _pa(f"list-{name}", "lists", src)

    return [
        task("digit-length", "(length xs)", _OUT_NAT),
        task(
            "bool-length", "(length xs)", _OUT_NAT, arg="(choose-list choose-bool)"
        ),
        task("take-2", "(take-n 2 xs)", _OUT_DIGIT_LIST),
        task("drop-2", "(drop-n 2 xs)", _OUT_DIGIT_LIST),
        task("nth-1", "(nth-or xs 1 0)", _OUT_DIGIT),
        task("exists-even", "(exists-p even-digit? xs)", _OUT_BOOL),
        task("count-even", "(count-p even-digit? xs)", _OUT_NAT),
        task(
            "erase-even",
            "(filter-list (lambda (d) (not (even-digit? d))) xs)",
            _OUT_DIGIT_LIST,
        ),
        task("filter-lt5", "(filter-list (lambda (d) (< d 5)) xs)", _OUT_DIGIT_LIST),
        task("map-inc", "(map-list (lambda (d) (+ d 1)) xs)", _OUT_NAT_LIST),
        task(
            "append",
            "(append (first xs) (second xs))",
            _OUT_DIGIT_LIST,
            arg="(list (choose-list choose-digit) (choose-list choose-digit))",
        ),
        task(
            "fold-and",
            "(fold-list (lambda (acc x) (and acc x)) #t xs)",
            _OUT_BOOL,
            arg="(choose-list choose-bool)",
        ),
        task(
            "fold-or",
            "(fold-list (lambda (acc x) (or acc x)) #f xs)",
            _OUT_BOOL,
            arg="(choose-list choose-bool)",
        ),
    ]


def tree_tasks():
    def task(name, body, out, leaf="choose-digit", opts="((f 2))"):
        src = (
            f"(define (task-fn t) {body})\n"
            f"(define (task-gen) (list task-fn (choose-tree-of {leaf} '{opts})))\n"
            f"{out}"
        )
        return _pa(f"tree-{name}", "trees", src)

    digit_tree_out = _out_tree("choose-digit", "invert-digit", "((f 2))")
    return [
        task("inner-count", "(tree-inner t)", _OUT_NAT),
        task("leaf-count", "(tree-leaves t)", _OUT_NAT),
        task("node-count", "(tree-nodes t)", _OUT_NAT),
        task("depth", "(tree-depth t)", _OUT_NAT),
        task("subtree-path", "(subtree-at t '(0 1))", digit_tree_out),
        task("count-even-leaves", "(tree-count-leaves even-digit? t)", _OUT_NAT),
        task(
            "map-inc",
            "(tree-map-leaves (lambda (d) (+ d 1)) t)",
            _out_tree("choose-nat", "invert-nat", "((f 2))"),
        ),
        task(
            "fold-and",
            "(tree-fold-leaves (lambda (acc x) (and acc x)) #t t)",
            _OUT_BOOL,
            leaf="choose-bool",
        ),
        task(
            "mixed-leaf-count",
            "(tree-leaves t)",
            _OUT_NAT,
            opts="((f 1) (g 2))",
        ),
    ]


_HORNER = """\
(define (horner-of v cs)
  (if (null? cs)
      0
      (if (null? (rest cs))
          (first cs)
          (list v (first cs) (horner-of v (rest cs))))))
"""


def polynomial_tasks():
    tasks = []
    for var in ("x", "y"):
        src = (
            _HORNER
            + f"(define (task-fn cs) (horner-of '{var} cs))\n"
            + "(define (task-gen) (list task-fn (choose-list choose-digit)))\n"
            + _out_tree("choose-digit", "invert-digit", f"(({var} 2))")
        )
        tasks.append(_pa(f"poly-horner-{var}", "polynomials", src))
    src_xy = (
        _HORNER
        + """\
(define (task-fn css)
  (if (null? css)
      0
      (if (null? (rest css))
          (horner-of 'y (first css))
          (list 'x (horner-of 'y (first css)) (task-fn (rest css))))))
(define (task-gen)
  (list task-fn (choose-list (lambda () (choose-list choose-digit)))))
"""
        + _out_tree("choose-digit", "invert-digit", "((x 2) (y 2))")
    )
    tasks.append(_pa("poly-horner-xy", "polynomials", src_xy))
    src_add = (
        """\
(define (poly-sum ps qs)
  (if (null? ps)
      qs
      (if (null? qs)
          ps
          (cons (+ (first ps) (first qs)) (poly-sum (rest ps) (rest qs))))))
(define (task-fn pq) (poly-sum (first pq) (second pq)))
(define (task-gen)
  (list task-fn (list (choose-list choose-digit) (choose-list choose-digit))))
"""
        + _OUT_NAT_LIST
    )
    tasks.append(_pa("poly-add", "polynomials", src_add))
    return tasks


# Rule sets must be terminating: checked by generate.check_rule_set before
# a task is admitted (size-reducing, or symbol-precedence decreasing).
FO_RULE_SETS = {
    "fo-simp-fg": ("(((f ?x) (g ?x)))", "((f 1) (g 1) (h 1))"),
    "fo-simp-chain": (
        "(((f (f ?x)) (g (g ?x))) ((g (g ?x)) (h ?x)))",
        "((f 1) (g 1) (h 1))",
    ),
    "fo-simp-collapse": ("(((f ?x ?y) (g ?x)))", "((f 2) (g 1))"),
}


def fo_tasks():
    tasks = []
    for task_id, (rules, opts) in FO_RULE_SETS.items():
        src = (
            f"(define task-rules '{rules})\n"
            "(define task-mvs '(?x ?y))\n"
            f"(define (task-fn t) (rewrite-fix t task-rules task-mvs))\n"
            f"(define (task-gen) (list task-fn (choose-tree-of choose-digit '{opts})))\n"
            + _out_tree("choose-digit", "invert-digit", opts)
        )
        tasks.append(_pa(task_id, "fo-simplify", src))
    return tasks


def ho_tasks():
    def lterm_out(depth):
        return _output_defs(
            f"(choose-lterm {depth} task-mvs)", f"(invert-lterm {depth} task-mvs v)"
        )

    tasks = []
    for name, mvs, gen_depth in (("ab", "(a b)", 3), ("abc", "(a b c)", 2)):
        src = (
            f"(define task-mvs '{mvs})\n"
            "(define (task-fn t) (normalize t))\n"
            f"(define (task-gen) (list task-fn (choose-lterm {gen_depth} task-mvs)))\n"
            + lterm_out(5)
        )
        tasks.append(_pa(f"ho-beta-{name}", "ho-reduce", src))
    src_subst = (
        "(define task-mvs '(a b))\n"
        "(define (task-fn p) (normalize (subst-mv (first p) 'a (second p))))\n"
        "(define (task-gen)\n"
        "  (list task-fn (list (choose-lterm 2 task-mvs) (choose-lterm 2 task-mvs))))\n"
        + lterm_out(5)
    )
    tasks.append(_pa("ho-subst-beta", "ho-reduce", src_subst))
    for name, sig in (
        ("1", "((a i) (f (-> i i)) (g (-> i (-> i i))))"),
        ("2", "((b i) (h (-> i i)) (k (-> (-> i i) i)))"),
    ):
        src = (
            f"(define task-sig '{sig})\n"
            f"(define task-mvs (map-list first task-sig))\n"
            "(define (task-fn t) (infer-type t task-sig))\n"
            "(define (task-gen) (list task-fn (choose-aterm 2 task-mvs)))\n"
            + _output_defs("(choose-type)", "(invert-type v)")
        )
        tasks.append(_pa(f"ho-typeinfer-{name}", "ho-reduce", src))
    return tasks


_PLANTED_SRC = """\
(define (walk-cons t d)
  (if (= d 0)
      (if t #t (fail))
      (walk-cons (if (choose-bool) (second t) (first t)) (- d 1))))
(define (cpair a b) (lambda (f) (f a b)))
(define (cfst p) (p (lambda (a b) a)))
(define (csnd p) (p (lambda (a b) b)))
(define (walk-church t d)
  (if (= d 0)
      (if t #t (fail))
      (walk-church ((if (choose-bool) csnd cfst) t) (- d 1))))
"""


def planted_tasks():
    tasks = []
    for enc, depths in (("cons", (3, 5)), ("church", (3, 4))):
        for d in depths:
            tasks.append(
                TaskSpec(
                    f"planted-{enc}-d{d}",
                    "planted-path",
                    "planted",
                    _PLANTED_SRC,
                    {"encoding": enc, "depth": d},
                )
            )
    return tasks


def all_tasks(families: list[str] | None = None) -> list[TaskSpec]:
    builders = {
        "identity": identity_tasks,
        "arithmetic": arithmetic_tasks,
        "lists": list_tasks,
        "trees": tree_tasks,
        "polynomials": polynomial_tasks,
        "fo-simplify": fo_tasks,
        "ho-reduce": ho_tasks,
        "planted-path": planted_tasks,
    }
    if families is None:
        families = FAMILIES
    unknown = set(families) - set(builders)
    if unknown:
        raise ValueError(f"unknown families: {sorted(unknown)}")
    out: list[TaskSpec] = []
    for fam in FAMILIES:
        if fam in families:
            out.extend(builders[fam]())
    return out
