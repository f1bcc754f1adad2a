"""Runtime value universe and environments.

Values are bools, 64-bit signed ints, interned symbols, nil, pairs,
closures, host primitives, and unordered sets/maps. Everything is
immutable after construction; only the global (root) environment frame
accepts new bindings, via top-level `define`.
"""

from __future__ import annotations

from .errors import DodonaRuntimeError

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


def check_int(n: int) -> int:
    if not (INT_MIN <= n <= INT_MAX):
        raise DodonaRuntimeError(f"integer overflow: {n}")
    return n


class Symbol:
    """Interned, case-sensitive symbol; equality is identity."""

    __slots__ = ("name",)
    _interned: dict[str, "Symbol"] = {}

    def __new__(cls, name: str):
        sym = cls._interned.get(name)
        if sym is None:
            sym = object.__new__(cls)
            sym.name = name
            cls._interned[name] = sym
        return sym

    def __repr__(self):
        return f"Symbol({self.name})"


class _Nil:
    __slots__ = ()

    def __repr__(self):
        return "NIL"


NIL = _Nil()


class Pair:
    __slots__ = ("head", "tail")

    def __init__(self, head, tail):
        self.head = head
        self.tail = tail

    def __repr__(self):
        return f"Pair({self.head!r}, {self.tail!r})"


class Closure:
    __slots__ = ("params", "body", "env")

    def __init__(self, params, body, env):
        self.params = tuple(params)  # tuple[Symbol]
        self.body = body  # Expr
        self.env = env

    def __repr__(self):
        names = " ".join(p.name for p in self.params)
        return f"<closure ({names})>"


class Primitive:
    __slots__ = ("name", "arity", "fn")

    def __init__(self, name, arity, fn):
        self.name = name
        self.arity = arity  # exact int, (min, None) for variadic-with-min
        self.fn = fn

    def __repr__(self):
        return f"<prim:{self.name}>"


class SetValue:
    """Unordered collection; elements deduplicated by structural equality
    and stored in canonical (printed) order so construction order never
    shows through."""

    __slots__ = ("elements",)

    def __init__(self, elements):
        seen = {}
        for v in elements:
            seen.setdefault(value_key(v), v)
        self.elements = tuple(
            sorted(seen.values(), key=print_value)
        )

    def __repr__(self):
        return print_value(self)


class MapValue:
    """Unordered key->value association; entries in canonical key order."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        seen = {}
        for k, v in entries:
            kk = value_key(k)
            if kk in seen:
                raise DodonaRuntimeError("duplicate map key: " + print_value(k))
            seen[kk] = (k, v)
        self.entries = tuple(
            sorted(seen.values(), key=lambda kv: print_value(kv[0]))
        )

    def __repr__(self):
        return print_value(self)


# ---------------------------------------------------------------------------
# Structural equality / canonical printing


def values_equal(a, b) -> bool:
    """Structural equality on the closure-free fragment; closures and
    primitives compare by identity."""
    if a is b:
        return True
    ta, tb = type(a), type(b)
    if ta is not tb:
        return False
    if ta is bool or ta is int:
        return a == b
    if ta is Pair:
        while type(a) is Pair and type(b) is Pair:
            if not values_equal(a.head, b.head):
                return False
            a, b = a.tail, b.tail
        return values_equal(a, b)
    if ta is SetValue:
        return value_key(a) == value_key(b)
    if ta is MapValue:
        return value_key(a) == value_key(b)
    # Symbol is interned, _Nil is a singleton, Closure/Primitive by identity
    return False


def value_key(v):
    """Canonical hashable key for structural comparison. Closures and
    primitives key by identity."""
    t = type(v)
    if t is bool:
        return ("b", v)
    if t is int:
        return ("i", v)
    if t is Symbol:
        return ("s", v.name)
    if t is _Nil:
        return ("nil",)
    if t is Pair:
        return ("p", value_key(v.head), value_key(v.tail))
    if t is SetValue:
        return ("set", frozenset(value_key(e) for e in v.elements))
    if t is MapValue:
        return (
            "map",
            frozenset((value_key(k), value_key(x)) for k, x in v.entries),
        )
    if t is Closure or t is Primitive:
        return ("id", id(v))
    raise TypeError(f"not a value: {v!r}")


def print_value(v) -> str:
    """Canonical printed form; sets/maps print in their (already
    canonical) stored order."""
    t = type(v)
    if t is bool:
        return "#t" if v else "#f"
    if t is int:
        return str(v)
    if t is Symbol:
        return v.name
    if t is _Nil:
        return "()"
    if t is Pair:
        parts = []
        while type(v) is Pair:
            parts.append(print_value(v.head))
            v = v.tail
        if v is NIL:
            return "(" + " ".join(parts) + ")"
        return "(" + " ".join(parts) + " . " + print_value(v) + ")"
    if t is SetValue:
        return "#set(" + " ".join(print_value(e) for e in v.elements) + ")"
    if t is MapValue:
        return (
            "#map("
            + " ".join(
                "(" + print_value(k) + " " + print_value(x) + ")"
                for k, x in v.entries
            )
            + ")"
        )
    if t is Closure:
        return repr(v)
    if t is Primitive:
        return repr(v)
    raise TypeError(f"not a value: {v!r}")


def is_value(v) -> bool:
    return type(v) in (
        bool,
        int,
        Symbol,
        _Nil,
        Pair,
        Closure,
        Primitive,
        SetValue,
        MapValue,
    )


# ---------------------------------------------------------------------------
# Scheme list helpers


def from_pylist(xs):
    out = NIL
    for x in reversed(xs):
        out = Pair(x, out)
    return out


def to_pylist(v):
    out = []
    while type(v) is Pair:
        out.append(v.head)
        v = v.tail
    if v is not NIL:
        raise DodonaRuntimeError("improper list: " + print_value(v))
    return out


def list_length(v) -> int:
    n = 0
    while type(v) is Pair:
        n += 1
        v = v.tail
    if v is not NIL:
        raise DodonaRuntimeError("improper list")
    return n


# ---------------------------------------------------------------------------
# Environments


class Env:
    __slots__ = ("frame", "parent", "is_global")

    def __init__(self, frame=None, parent=None, is_global=False):
        self.frame = frame if frame is not None else {}
        self.parent = parent
        self.is_global = is_global

    def lookup(self, sym: Symbol):
        env = self
        while env is not None:
            v = env.frame.get(sym, _MISSING)
            if v is not _MISSING:
                return v
            env = env.parent
        raise DodonaRuntimeError(f"unbound symbol: {sym.name}")

    def extend(self, names, values) -> "Env":
        if len(names) != len(values):
            raise DodonaRuntimeError(
                f"arity mismatch: expected {len(names)} arguments, got {len(values)}"
            )
        return Env(dict(zip(names, values)), parent=self)

    def define(self, sym: Symbol, value) -> None:
        env = self
        while env is not None and not env.is_global:
            env = env.parent
        if env is None:
            raise DodonaRuntimeError("define outside of a global scope")
        env.frame[sym] = value

    def bound_here_or_above(self, sym: Symbol) -> bool:
        env = self
        while env is not None:
            if sym in env.frame:
                return True
            env = env.parent
        return False


_MISSING = object()


# ---------------------------------------------------------------------------
# Primitives


def _want_int(v, who):
    if type(v) is not int:
        raise DodonaRuntimeError(f"{who}: expected integer, got " + print_value(v))
    return v


def _prim_add(args):
    total = 0
    for a in args:
        total += _want_int(a, "+")
    return check_int(total)


def _prim_sub(args):
    if len(args) == 1:
        return check_int(-_want_int(args[0], "-"))
    total = _want_int(args[0], "-")
    for a in args[1:]:
        total -= _want_int(a, "-")
    return check_int(total)


def _prim_mul(args):
    total = 1
    for a in args:
        total *= _want_int(a, "*")
    return check_int(total)


def _trunc_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _prim_div(args):
    a, b = (_want_int(x, "/") for x in args)
    if b == 0:
        raise DodonaRuntimeError("division by zero")
    return check_int(_trunc_div(a, b))


def _prim_rem(args):
    a, b = (_want_int(x, "remainder") for x in args)
    if b == 0:
        raise DodonaRuntimeError("remainder by zero")
    return check_int(a - b * _trunc_div(a, b))


def _prim_bool(v, who):
    if type(v) is not bool:
        raise DodonaRuntimeError(f"{who}: expected bool, got " + print_value(v))
    return v


def _prim_nth(args):
    n = _want_int(args[0], "nth")
    v = args[1]
    while type(v) is Pair:
        if n == 0:
            return v.head
        n -= 1
        v = v.tail
    raise DodonaRuntimeError("nth: index out of range")


def _prim_append(args):
    items = []
    for a in args[:-1] if args else []:
        items.extend(to_pylist(a))
    tail = args[-1] if args else NIL
    out = tail
    for x in reversed(items):
        out = Pair(x, out)
    return out


def _prim_map_of(args):
    if len(args) % 2 != 0:
        raise DodonaRuntimeError("map-of: expected an even number of arguments")
    return MapValue(list(zip(args[0::2], args[1::2])))


def _first(args):
    if type(args[0]) is not Pair:
        raise DodonaRuntimeError("first: expected a pair, got " + print_value(args[0]))
    return args[0].head


def _rest(args):
    if type(args[0]) is not Pair:
        raise DodonaRuntimeError("rest: expected a pair, got " + print_value(args[0]))
    return args[0].tail


def _second(args):
    return _first([_rest(args)])


_PRIMITIVES = [
    ("+", (0, None), _prim_add),
    ("-", (1, None), _prim_sub),
    ("*", (0, None), _prim_mul),
    ("/", 2, _prim_div),
    ("remainder", 2, _prim_rem),
    ("max", (1, None), lambda args: max(_want_int(a, "max") for a in args)),
    ("min", (1, None), lambda args: min(_want_int(a, "min") for a in args)),
    ("=", 2, lambda args: values_equal(args[0], args[1])),
    ("<", 2, lambda args: _want_int(args[0], "<") < _want_int(args[1], "<")),
    (">", 2, lambda args: _want_int(args[0], ">") > _want_int(args[1], ">")),
    ("cons", 2, lambda args: Pair(args[0], args[1])),
    ("first", 1, _first),
    ("second", 1, _second),
    ("rest", 1, _rest),
    ("nth", 2, _prim_nth),
    ("null?", 1, lambda args: args[0] is NIL),
    ("pair?", 1, lambda args: type(args[0]) is Pair),
    ("list", (0, None), from_pylist),
    ("not", 1, lambda args: not _prim_bool(args[0], "not")),
    # strict (non-short-circuiting) boolean connectives
    ("and", (0, None), lambda args: all(_prim_bool(a, "and") for a in args)),
    ("or", (0, None), lambda args: any(_prim_bool(a, "or") for a in args)),
    ("length", 1, lambda args: list_length(args[0])),
    ("append", (0, None), _prim_append),
    ("set-of", (0, None), lambda args: SetValue(args)),
    ("map-of", (0, None), _prim_map_of),
]


def apply_primitive(prim: Primitive, args):
    arity = prim.arity
    if isinstance(arity, int):
        if len(args) != arity:
            raise DodonaRuntimeError(
                f"{prim.name}: expected {arity} arguments, got {len(args)}"
            )
    else:
        lo, hi = arity
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise DodonaRuntimeError(
                f"{prim.name}: expected at least {lo} arguments, got {len(args)}"
            )
    return prim.fn(args)


def make_global_env() -> Env:
    """Fresh global environment with the primitive set bound."""
    env = Env(is_global=True)
    for name, arity, fn in _PRIMITIVES:
        env.frame[Symbol(name)] = Primitive(name, arity, fn)
    return env
