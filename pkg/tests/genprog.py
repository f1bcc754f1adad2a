"""Seeded random program generator for conformance and property tests.

Generates well-typed source strings over ints, booleans, and integer
lists, using only total operations so the reference evaluator and the
step interpreter must agree on a value (never on an error)."""

from __future__ import annotations

import random
import re


def gen_int(rng: random.Random, depth: int, env: list[str]) -> str:
    if depth == 0 or rng.random() < 0.3:
        if env and rng.random() < 0.5:
            return rng.choice(env)
        return str(rng.randrange(10))
    form = rng.randrange(9)
    d = depth - 1
    if form == 0:
        op = rng.choice(["+", "-", "*", "max", "min"])
        return f"({op} {gen_int(rng, d, env)} {gen_int(rng, d, env)})"
    if form == 1:
        return (
            f"(if {gen_bool(rng, d, env)} {gen_int(rng, d, env)}"
            f" {gen_int(rng, d, env)})"
        )
    if form == 2:
        v = f"v{len(env)}"
        return f"(let (({v} {gen_int(rng, d, env)})) {gen_int(rng, d, env + [v])})"
    if form == 3:
        v = f"v{len(env)}"
        return f"((lambda ({v}) {gen_int(rng, d, env + [v])}) {gen_int(rng, d, env)})"
    if form == 4:
        return f"(length {gen_list(rng, d, env)})"
    if form == 5:
        return f"(first (cons {gen_int(rng, d, env)} {gen_list(rng, d, env)}))"
    if form == 6:
        # let* introduces two bindings, the second shadowing-capable
        v1, v2 = f"v{len(env)}", f"v{len(env) + 1}"
        return (
            f"(let* (({v1} {gen_int(rng, d, env)})"
            f" ({v2} {gen_int(rng, d, env + [v1])}))"
            f" {gen_int(rng, d, env + [v1, v2])})"
        )
    if form == 7:
        return f"(second (list {gen_int(rng, d, env)} {gen_int(rng, d, env)}))"
    return f"(+ {gen_int(rng, d, env)} 1)"


def gen_bool(rng: random.Random, depth: int, env: list[str]) -> str:
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(["#t", "#f"])
    form = rng.randrange(6)
    d = depth - 1
    if form == 0:
        op = rng.choice(["=", "<", ">"])
        return f"({op} {gen_int(rng, d, env)} {gen_int(rng, d, env)})"
    if form == 1:
        return f"(not {gen_bool(rng, d, env)})"
    if form == 2:
        op = rng.choice(["and", "or"])
        return f"({op} {gen_bool(rng, d, env)} {gen_bool(rng, d, env)})"
    if form == 3:
        return f"(null? {gen_list(rng, d, env)})"
    if form == 4:
        return (
            f"(if {gen_bool(rng, d, env)} {gen_bool(rng, d, env)}"
            f" {gen_bool(rng, d, env)})"
        )
    return f"(= {gen_list(rng, d, env)} {gen_list(rng, d, env)})"


def gen_list(rng: random.Random, depth: int, env: list[str]) -> str:
    if depth == 0 or rng.random() < 0.4:
        n = rng.randrange(3)
        if n == 0:
            return "'()"
        items = " ".join(gen_int(rng, 0, env) for _ in range(n))
        return f"(list {items})"
    form = rng.randrange(4)
    d = depth - 1
    if form == 0:
        return f"(cons {gen_int(rng, d, env)} {gen_list(rng, d, env)})"
    if form == 1:
        return f"(append {gen_list(rng, d, env)} {gen_list(rng, d, env)})"
    if form == 2:
        return f"(rest (cons {gen_int(rng, d, env)} {gen_list(rng, d, env)}))"
    return (
        f"(if {gen_bool(rng, d, env)} {gen_list(rng, d, env)}"
        f" {gen_list(rng, d, env)})"
    )


_LITERAL = re.compile(r"(?<![\w#])(\d)(?![\w])")


def with_hole(rng: random.Random, depth: int = 4) -> str | None:
    """A random int program with one digit literal replaced by `XHOLE`,
    or None if the program contains no digit literal."""
    src = gen_int(rng, depth, [])
    spots = list(_LITERAL.finditer(src))
    if not spots:
        return None
    m = rng.choice(spots)
    return src[: m.start()] + "XHOLE" + src[m.end() :]
