"""Small hand-checkable models used by tests, scripts and the CLI demo files."""

from __future__ import annotations

import itertools

import numpy as np

from wordentropy.lexicon import Lexicon, TokenEntry, build_lexicon
from wordentropy.lm import BOS, NGramModel


def toy_lexicon_a() -> Lexicon:
    return build_lexicon([TokenEntry(0, "▁a", True), TokenEntry(1, "▁b", True), TokenEntry(2, "x", False)])


def toy_model_a() -> NGramModel:
    """P = [0.5, 0.25, 0.25] over (▁a, ▁b, x) in every context.

    Word "a" has probability 0.5 and the word entropy is exactly 2 bits.
    """
    return NGramModel(toy_lexicon_a(), 1, {(): [0.5, 0.25, 0.25]})


def toy_model_b() -> NGramModel:
    lex = build_lexicon([TokenEntry(0, "▁a", True), TokenEntry(1, "x", False)])
    return NGramModel(lex, 1, {(): [0.5, 0.5]})


def deterministic_model() -> NGramModel:
    lex = build_lexicon([TokenEntry(0, "▁a", True)])
    return NGramModel(lex, 1, {(): [1.0]})


def random_model(rng: np.random.Generator, max_boundary: int = 3, max_internal: int = 3,
                 max_order: int = 3, sparsity: float = 0.3, boundary_floor: float = 0.2) -> NGramModel:
    """A random model with a full table for every context up to ``order - 1``.

    Every table puts at least `boundary_floor` on boundary tokens, so words
    end with probability >= `boundary_floor` at each step.
    """
    nb = int(rng.integers(1, max_boundary + 1))
    ni = int(rng.integers(0, max_internal + 1))
    entries = [TokenEntry(i, f"▁w{i}", True) for i in range(nb)]
    entries += [TokenEntry(nb + j, f"p{j}", False) for j in range(ni)]
    lex = build_lexicon(entries)
    order = int(rng.integers(1, max_order + 1))
    n = nb + ni

    def draw():
        p = rng.dirichlet(np.full(n, 0.7))
        p[rng.random(n) < sparsity] = 0.0
        p /= p.sum() if p.sum() > 0 else 1.0
        p *= 1.0 - boundary_floor
        p[int(rng.integers(0, nb))] += boundary_floor + (1.0 - boundary_floor - p.sum())
        return p

    tables = {(): draw()}
    for width in range(1, order):
        for ctx in itertools.product(range(n), repeat=width):
            tables[ctx] = draw()
        for ctx in itertools.product(range(n), repeat=width - 1):
            tables[(BOS, *ctx)] = draw()
    return NGramModel(lex, order, tables)
