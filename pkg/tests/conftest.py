"""Shared fixtures: seeded term generators and corpus location."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from skic import lambda_ir as L
from skic import ski_core as SK

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR


def corpus_sources() -> list[tuple[str, str]]:
    return [
        (p.stem, p.read_text(encoding="utf-8"))
        for p in sorted(CORPUS_DIR.glob("*.lam"), key=lambda p: p.name)
    ]


# --- closed lambda-term generator ------------------------------------------


def gen_closed_term(rng: random.Random, max_depth: int = 6) -> L.Term:
    """Random closed term of depth <= max_depth; may be stuck or
    divergent — callers filter."""

    def go(depth: int, scope: tuple[str, ...]) -> L.Term:
        if depth <= 0:
            return _leaf(rng, scope)
        roll = rng.random()
        if roll < 0.30:
            name = f"v{len(scope)}"
            return L.Lam(name, go(depth - 1, scope + (name,)))
        if roll < 0.45:
            return L.App(go(depth - 1, scope), go(depth - 1, scope))
        if roll < 0.65:
            op = rng.choice(["add", "sub", "mul"])
            return L.apply_spine(L.Prim(op), go(depth - 1, scope), go(depth - 1, scope))
        if roll < 0.75:
            return L.apply_spine(L.Prim("eq"), go(depth - 1, scope), go(depth - 1, scope))
        if roll < 0.85:
            cond = L.apply_spine(L.Prim("eq"), go(depth - 2, scope), go(depth - 2, scope))
            return L.apply_spine(L.Prim("if"), cond, go(depth - 1, scope), go(depth - 1, scope))
        return _leaf(rng, scope)

    def _leaf(rng: random.Random, scope: tuple[str, ...]) -> L.Term:
        if scope and rng.random() < 0.6:
            return L.Var(rng.choice(scope))
        if rng.random() < 0.1:
            return L.BoolLit(rng.random() < 0.5)
        return L.IntLit(rng.randint(-3, 4))

    # a small lambda prefix gives probing something to feed; the prefix
    # spends depth budget so the whole term stays within max_depth
    wrappers = rng.randint(0, 2)
    body = go(max_depth - 1 - wrappers, ())
    for i in range(wrappers):
        body = L.Lam(f"w{i}", body)
    return body


def gen_normalizing_term(rng: random.Random, max_depth: int = 6, fuel: int = 5000) -> L.Term:
    """Closed term whose full normal form exists within `fuel` steps."""
    while True:
        t = gen_closed_term(rng, max_depth)
        try:
            L.beta_reduce(t, fuel)
        except (L.FuelExhausted, L.EvalError):
            continue
        return t


# --- combinator-term generators ---------------------------------------------


def gen_ski_term(rng: random.Random, max_depth: int = 5) -> SK.SkiTerm:
    """Random lambda-free term for structural tests (no reduction)."""
    if max_depth <= 0 or rng.random() < 0.4:
        return rng.choice(
            [
                SK._S,
                SK._K,
                SK._I,
                SK.SInt(rng.randint(-9, 9)),
                SK.SBool(rng.random() < 0.5),
                SK.SPrim(rng.choice(list(L.PRIM_OPS))),
                SK.FreeVar(rng.choice(["a", "b", "q0", "ref_1"])),
            ]
        )
    return SK.SApp(gen_ski_term(rng, max_depth - 1), gen_ski_term(rng, max_depth - 1))


def gen_normalizing_ski(rng: random.Random, max_depth: int = 4, fuel: int = 2000) -> SK.SkiTerm:
    """Lambda-free term with a combinator normal form within `fuel`."""
    while True:
        t = gen_ski_term(rng, max_depth)
        try:
            SK.ski_reduce(t, fuel)
        except (L.FuelExhausted, L.EvalError):
            continue
        return t
