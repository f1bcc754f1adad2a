"""The step evaluator.

Evaluates an expression in applicative order until it either terminates
with a value or suspends at a `choose` with a reified continuation: a
stack of segments, each a hole-template expression plus the environment
and evaluated-argument count to resume with.

Continuation stacks are immutable cons chains so a suspended choicepoint
can be resumed any number of times (tree search) without interference.
"""

from __future__ import annotations

import os

from .errors import BudgetExceededError, DodonaRuntimeError
from .reader import HOLE, Const, Expr, ListForm, Sym, _Hole
from .values import (
    NIL,
    Closure,
    Env,
    Pair,
    Primitive,
    Symbol,
    apply_primitive,
    is_value,
    print_value,
    to_pylist,
)

DEFAULT_STEP_BUDGET = int(os.environ.get("DODONA_STEP_BUDGET", "1000000"))


class StepBudget:
    """Mutable countdown shared by one evaluation (or one whole search)."""

    __slots__ = ("remaining",)

    def __init__(self, limit: int = DEFAULT_STEP_BUDGET):
        self.remaining = limit

    def tick(self):
        self.remaining -= 1
        if self.remaining < 0:
            raise BudgetExceededError("step budget exceeded")


class Segment:
    """One suspended frame: a template with exactly one hole, the
    environment to resume in, and the evaluated-argument count."""

    __slots__ = ("template", "env", "count")

    def __init__(self, template: Expr, env: Env, count: int):
        self.template = template
        self.env = env
        self.count = count

    def __repr__(self):
        from .reader import print_expr

        return f"Segment({print_expr(self.template)}, count={self.count})"


# A continuation stack is None (empty) or a (Segment, rest) pair.


def cstack_to_list(cstack) -> list[Segment]:
    out = []
    while cstack is not None:
        out.append(cstack[0])
        cstack = cstack[1]
    return out


class Terminal:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"Terminal({print_value(self.value)})"


class Choicepoint:
    """Suspended state at a `choose`: candidate values plus the reified
    continuation. Empty `choices` denotes a dead (failing) branch."""

    __slots__ = ("choices", "cstack")

    def __init__(self, choices: list, cstack):
        self.choices = choices
        self.cstack = cstack

    @property
    def segments(self) -> list[Segment]:
        return cstack_to_list(self.cstack)

    def __repr__(self):
        inner = " ".join(print_value(c) for c in self.choices)
        return f"Choicepoint(({inner}), {len(self.segments)} segments)"


# StepResult = Terminal | Choicepoint


def fill_hole(template: Expr, replacement: Expr) -> Expr:
    """Replace the single top-level hole in a segment template."""
    assert isinstance(template, ListForm)
    items = list(template.items)
    for k, item in enumerate(items):
        if isinstance(item, _Hole):
            items[k] = replacement
            return ListForm(items, template.span)
    raise AssertionError("segment template has no hole")


_QUOTE = "quote"
_LAMBDA = "lambda"
_IF = "if"
_CHOOSE = "choose"
_DEFINE = "define"
_SPECIAL = {_QUOTE, _LAMBDA, _IF, _CHOOSE, _DEFINE}


def expr_to_value(e: Expr):
    """The meaning of `(quote e)`: expressions as data."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Sym):
        return Symbol(e.name)
    if isinstance(e, ListForm):
        out = NIL
        for item in reversed(e.items):
            out = Pair(expr_to_value(item), out)
        return out
    raise DodonaRuntimeError(f"cannot quote {e!r}")


def step(e: Expr, env: Env, i: int, cstack, budget: StepBudget):
    """Evaluate until a Terminal value or a Choicepoint.

    `i` is the number of leading elements of a list form that are already
    evaluated (0 for a fresh expression). Iterative, so recursion depth
    stays bounded regardless of the program.
    """
    while True:
        budget.tick()

        # --- produce a value for atoms, then pop the stack
        value = _MISSING
        if isinstance(e, Const):
            value = e.value
        elif isinstance(e, Sym):
            value = env.lookup(Symbol(e.name))
        elif not isinstance(e, ListForm):
            raise DodonaRuntimeError(f"cannot evaluate {e!r}")
        else:
            head = e.items[0]
            name = head.name if isinstance(head, Sym) else None
            if name == _QUOTE:
                value = expr_to_value(e.items[1])
            elif name == _LAMBDA:
                params = tuple(Symbol(p.name) for p in e.items[1].items)
                value = Closure(params, e.items[2], env)
            elif name == _IF:
                if i == 0:
                    cond = e.items[1]
                    if isinstance(cond, Const):
                        i = 1
                        continue
                    cstack = (Segment(ListForm([head, HOLE, e.items[2], e.items[3]], e.span), env, 1), cstack)
                    e, i = cond, 0
                    continue
                cond = e.items[1]
                assert isinstance(cond, Const)
                # Scheme truthiness: anything but #f is true
                e = e.items[2] if cond.value is not False else e.items[3]
                i = 0
                continue
            elif name == _CHOOSE:
                if i == 0:
                    arg = e.items[1]
                    if isinstance(arg, Const):
                        i = 1
                        continue
                    cstack = (Segment(ListForm([head, HOLE], e.span), env, 1), cstack)
                    e, i = arg, 0
                    continue
                arg = e.items[1]
                assert isinstance(arg, Const)
                return Choicepoint(to_pylist(arg.value), cstack)
            elif name == _DEFINE:
                if i == 0:
                    body = e.items[2]
                    if isinstance(body, Const):
                        i = 1
                        continue
                    cstack = (Segment(ListForm([head, e.items[1], HOLE], e.span), env, 1), cstack)
                    e, i = body, 0
                    continue
                sym = Symbol(e.items[1].name)
                env.define(sym, e.items[2].value)
                value = sym
            else:
                # application
                items = e.items
                n = len(items)
                while i < n:
                    elem = items[i]
                    if isinstance(elem, Const):
                        i += 1
                        continue
                    if isinstance(elem, Sym):
                        # trivial sub-evaluation: resolve in place, no segment
                        v = env.lookup(Symbol(elem.name))
                        items = items[:i] + (Const(v),) + items[i + 1 :]
                        i += 1
                        continue
                    template = ListForm(
                        items[:i] + (HOLE,) + items[i + 1 :], e.span
                    )
                    cstack = (Segment(template, env, i + 1), cstack)
                    e, i = elem, 0
                    break
                else:
                    # all elements evaluated: apply
                    fn = items[0].value
                    args = [c.value for c in items[1:]]
                    if isinstance(fn, Primitive):
                        value = apply_primitive(fn, args)
                    elif isinstance(fn, Closure):
                        env = fn.env.extend(fn.params, args)
                        e, i = fn.body, 0
                        continue
                    else:
                        raise DodonaRuntimeError(
                            "cannot apply non-function " + print_value(fn)
                        )
                if value is _MISSING:
                    continue

        if value is _MISSING:
            continue

        # step-atom: pop the continuation stack with `value`
        if cstack is None:
            return Terminal(value)
        seg, cstack = cstack
        e = fill_hole(seg.template, Const(value))
        env = seg.env
        i = seg.count


_MISSING = object()


def resume(cp: Choicepoint, index: int, budget: StepBudget):
    """Continue a suspended evaluation with the chosen value."""
    if not (0 <= index < len(cp.choices)):
        raise DodonaRuntimeError(
            f"choice index {index} out of range for {len(cp.choices)} choices"
        )
    value = cp.choices[index]
    if cp.cstack is None:
        return Terminal(value)
    seg, rest = cp.cstack
    return step(fill_hole(seg.template, Const(value)), seg.env, seg.count, rest, budget)


def run_deterministic(e: Expr, env: Env, budget: StepBudget | None = None):
    """Evaluate a choose-free expression to its unique value."""
    if budget is None:
        budget = StepBudget()
    r = step(e, env, 0, None, budget)
    if isinstance(r, Choicepoint):
        raise DodonaRuntimeError("unexpected choicepoint in deterministic evaluation")
    return r.value


def load_forms(forms: list[Expr], env: Env, budget: StepBudget | None = None) -> None:
    """Run a sequence of top-level forms (typically `define`s) to
    completion. A choicepoint here is an error."""
    if budget is None:
        budget = StepBudget()
    for form in forms:
        run_deterministic(form, env, budget)


def serialize_choicepoint(cp: Choicepoint) -> dict:
    """JSON-friendly snapshot for logging/replay. Environments keep only
    the bindings referenced free by the segment template."""
    from .graph import free_symbols
    from .reader import print_expr

    segs = []
    for seg in cp.segments:
        free = free_symbols(seg.template)
        env_view = {}
        for sym in sorted(free, key=lambda s: s.name):
            if seg.env.bound_here_or_above(sym):
                env_view[sym.name] = print_value(seg.env.lookup(sym))
        segs.append(
            {
                "template": print_expr(seg.template),
                "env": env_view,
                "evaluated": seg.count,
            }
        )
    return {
        "choices": [print_value(c) for c in cp.choices],
        "segments": segs,
    }
