"""Ancestral sampling of whole (possibly multi-token) words and word scoring.

A word starts with a boundary token drawn from the boundary-renormalized
next-token distribution. Each later step draws either an internal token or
end-of-word, where P(EOW) is the mass the model puts on boundary tokens.
Word surprisal is the sum of the per-step surprisals, in bits.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wordentropy.errors import MalformedWordError, ValidationError
from wordentropy.lexicon import Lexicon
from wordentropy.lm import boundary_mass, word_initial_distribution

DEFAULT_SAMPLES = 512
DEFAULT_MAX_WORD_TOKENS = 20
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SamplerConfig:
    sample_count: int = DEFAULT_SAMPLES
    max_word_tokens: int = DEFAULT_MAX_WORD_TOKENS
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValidationError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.max_word_tokens < 1:
            raise ValidationError(f"max_word_tokens must be >= 1, got {self.max_word_tokens}")
        if not 0 <= self.seed <= _U64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class WordSample:
    token_ids: tuple[int, ...]
    surprisal_bits: float
    truncated: bool


@dataclass(frozen=True)
class SampleSet:
    samples: tuple[WordSample, ...]
    context_fingerprint: str
    config: SamplerConfig

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def surprisals(self) -> np.ndarray:
        return np.array([s.surprisal_bits for s in self.samples], dtype=float)

    @property
    def truncated_count(self) -> int:
        return sum(s.truncated for s in self.samples)


def context_fingerprint(context: Sequence[int]) -> str:
    data = ",".join(str(int(t)) for t in context).encode()
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def stream_rng(seed: int, context_index: int, stream_index: int) -> np.random.Generator:
    """Counter-based generator for one sample.

    Philox keyed by (seed, context_index); the stream index occupies the top
    word of the 256-bit counter, so streams never overlap and any subset can
    be generated in any order.
    """
    key = np.array([seed & _U64, context_index & _U64], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream_index & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class _Steps:
    """Per-prefix cumulative tables, shared by all samples drawn from one context."""

    def __init__(self, model, lexicon: Lexicon):
        self.model = model
        self.lexicon = lexicon
        self.internal_ids = lexicon.internal_ids
        self._initial = {}
        self._cont = {}

    def _dist(self, context):
        return self.model.next_token_distribution(context)

    def initial(self, context: tuple):
        hit = self._initial.get(context)
        if hit is None:
            p = word_initial_distribution(self.lexicon, self._dist(context))
            ids = np.flatnonzero(p)
            hit = (ids, np.cumsum(p[ids]), p)
            self._initial[context] = hit
        return hit

    def continuation(self, context: tuple):
        hit = self._cont.get(context)
        if hit is None:
            dist = self._dist(context)
            eow = boundary_mass(self.lexicon, dist)
            probs = dist[self.internal_ids]
            keep = probs > 0
            ids = self.internal_ids[keep]
            # EOW occupies the first slot of the cumulative table
            cum = np.cumsum(np.concatenate(([eow], probs[keep])))
            hit = (ids, cum, probs[keep], eow)
            self._cont[context] = hit
        return hit


def _draw(cum: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(i, len(cum) - 1)


def _sample(steps: _Steps, context: tuple, config: SamplerConfig, rng: np.random.Generator) -> WordSample:
    ids, cum, p = steps.initial(context)
    first = int(ids[_draw(cum, rng.random())])
    word = [first]
    bits = -math.log2(p[first])
    prefix = context + (first,)
    while len(word) < config.max_word_tokens:
        ids, cum, probs, eow = steps.continuation(prefix)
        k = _draw(cum, rng.random())
        if k == 0:
            bits -= math.log2(eow)
            return WordSample(tuple(word), bits + 0.0, False)
        tok = int(ids[k - 1])
        bits -= math.log2(probs[k - 1])
        word.append(tok)
        prefix = prefix + (tok,)
    return WordSample(tuple(word), bits + 0.0, True)


def sample_word(model, lexicon: Lexicon, context: Sequence[int], config: SamplerConfig,
                stream_index: int, context_index: int = 0) -> WordSample:
    """Draw one word; deterministic in (config.seed, context_index, stream_index)."""
    context = tuple(lexicon.check(t) for t in context)
    rng = stream_rng(config.seed, context_index, stream_index)
    return _sample(_Steps(model, lexicon), context, config, rng)


def sample_set(model, lexicon: Lexicon, context: Sequence[int], config: SamplerConfig,
               context_index: int = 0, workers: int | None = None) -> SampleSet:
    """Draw ``config.sample_count`` words using stream indices 0..n-1.

    With `workers` > 1 the streams are split across threads; the result is
    identical to the sequential one.
    """
    context = tuple(lexicon.check(t) for t in context)
    steps = _Steps(model, lexicon)
    n = config.sample_count

    def run(lo, hi):
        return [_sample(steps, context, config, stream_rng(config.seed, context_index, i)) for i in range(lo, hi)]

    if workers is None or workers <= 1 or n < 2:
        samples = run(0, n)
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(run, bounds[:-1], bounds[1:])
            samples = [s for part in parts for s in part]
    return SampleSet(tuple(samples), context_fingerprint(context), config)


def score_word(model, lexicon: Lexicon, context: Sequence[int], word_tokens: Sequence[int]) -> float:
    """Surprisal in bits of a complete word, EOW included.

    Returns ``math.inf`` when some step has zero probability.
    """
    context = tuple(lexicon.check(t) for t in context)
    word = [lexicon.check(t) for t in word_tokens]
    if not word:
        raise MalformedWordError("empty word")
    if not lexicon.boundary_mask[word[0]]:
        raise MalformedWordError(f"word must start with a boundary token, got {lexicon.surface(word[0])!r}")
    for t in word[1:]:
        if lexicon.boundary_mask[t]:
            raise MalformedWordError(f"boundary token {lexicon.surface(t)!r} inside a word")
    probs = [word_initial_distribution(lexicon, model.next_token_distribution(context))[word[0]]]
    prefix = context + (word[0],)
    for t in word[1:]:
        probs.append(model.next_token_distribution(prefix)[t])
        prefix = prefix + (t,)
    probs.append(boundary_mass(lexicon, model.next_token_distribution(prefix)))
    if min(probs) <= 0.0:
        return math.inf
    return -sum(math.log2(p) for p in probs) + 0.0
