"""Shannon and Rényi entropy estimates, in bits.

Three routes: the first-token approximation over a single next-token
distribution, Monte Carlo averages over sampled words, and exact values over
an exhaustive (depth-limited) enumeration of the word distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from wordentropy.errors import TractabilityError, ValidationError
from wordentropy.lexicon import Lexicon
from wordentropy.lm import boundary_mass, word_initial_distribution
from wordentropy.sampler import SampleSet

LN2 = math.log(2.0)
ENUMERATION_LIMIT = 10**7
RESIDUAL_TOL = 1e-6
DEFAULT_BOOTSTRAP = 1000


def check_order(alpha: float, allow_zero: bool = True) -> float:
    """Validate a Rényi order. 0 (support size) and ``math.inf`` are allowed."""
    alpha = float(alpha)
    if math.isnan(alpha) or alpha < 0 or (alpha == 0 and not allow_zero):
        raise ValidationError(f"Rényi order must be > 0, got {alpha}")
    return alpha


@dataclass(frozen=True)
class EntropyEstimate:
    bits: float
    n_samples: int
    stderr_bits: float | None = None
    truncated_count: int = 0


@dataclass(frozen=True)
class WordEnumeration:
    words: tuple[tuple[tuple[int, ...], float], ...]
    residual_mass: float
    depth: int

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.words], dtype=float)

    def as_dict(self) -> dict:
        return dict(self.words)


@dataclass(frozen=True)
class ExactResult:
    """Exact entropy with a flag set when the enumeration left too much mass out."""

    bits: float
    residual_mass: float
    approximate: bool

    def __float__(self) -> float:
        return self.bits


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def _renyi(p: np.ndarray, alpha: float) -> float:
    p = p[p > 0]
    if alpha == 1.0:
        return _shannon(p)
    if alpha == 0.0:
        return math.log2(p.size)
    if math.isinf(alpha):
        return -math.log2(p.max()) + 0.0
    # log-space sum of p**alpha
    return float(logsumexp(alpha * np.log(p)) / LN2 / (1.0 - alpha)) + 0.0


def first_token_shannon(dist) -> float:
    return _shannon(np.asarray(dist, dtype=float))


def first_token_renyi(dist, alpha: float) -> float:
    """Rényi entropy of order `alpha` of a next-token distribution.

    alpha=1 gives Shannon entropy, alpha=inf the min-entropy, and alpha=0 the
    log of the support size.
    """
    return _renyi(np.asarray(dist, dtype=float), check_order(alpha))


def _surprisals(samples) -> tuple[np.ndarray, int]:
    if isinstance(samples, SampleSet):
        return samples.surprisals, samples.truncated_count
    return np.asarray(samples, dtype=float), 0


def mc_shannon(samples) -> EntropyEstimate:
    """Mean sampled-word surprisal, with the standard error of the mean.

    Accepts a SampleSet or a plain sequence of surprisals in bits.
    """
    s, truncated = _surprisals(samples)
    n = s.size
    if n == 0:
        raise ValidationError("cannot estimate entropy from an empty sample set")
    stderr = float(np.std(s, ddof=1) / math.sqrt(n)) if n >= 2 else None
    return EntropyEstimate(float(np.mean(s)), n, stderr, truncated)


def renyi_from_surprisals(s: np.ndarray, alpha: float, axis=-1):
    """MC Rényi entropy over the last axis of `s` (bits), fully in log space."""
    n = s.shape[axis]
    ln_mean = logsumexp((1.0 - alpha) * LN2 * s, axis=axis) - math.log(n)
    return ln_mean / LN2 / (1.0 - alpha)


def mc_renyi(samples, alpha: float, n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> EntropyEstimate:
    """MC Rényi entropy: (1/(1-a)) log2 mean 2^((1-a) s_i).

    alpha=1 falls back to `mc_shannon`. The standard error comes from
    `n_boot` bootstrap resamples of the surprisals.
    """
    alpha = check_order(alpha, allow_zero=False)
    if math.isinf(alpha):
        raise ValidationError("alpha=inf is not supported by the Monte Carlo estimator; use exact_renyi")
    if alpha == 1.0:
        return mc_shannon(samples)
    s, truncated = _surprisals(samples)
    n = s.size
    if n == 0:
        raise ValidationError("cannot estimate entropy from an empty sample set")
    bits = float(renyi_from_surprisals(s, alpha)) + 0.0
    stderr = None
    if n >= 2:
        rng = np.random.default_rng(seed)
        boots = np.empty(n_boot)
        chunk = max(1, 2_000_000 // n)
        for lo in range(0, n_boot, chunk):
            hi = min(n_boot, lo + chunk)
            idx = rng.integers(0, n, size=(hi - lo, n))
            boots[lo:hi] = renyi_from_surprisals(s[idx], alpha, axis=1)
        stderr = float(np.std(boots, ddof=1))
    return EntropyEstimate(bits, n, stderr, truncated)


def enumerate_words(model, lexicon: Lexicon, context: Sequence[int], depth: int,
                    limit: int = ENUMERATION_LIMIT) -> WordEnumeration:
    """All words of at most `depth` tokens with their probabilities.

    Breadth-first over the word process; zero-probability branches are pruned.
    Mass on words longer than `depth` is reported as `residual_mass`.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    nb, ni = len(lexicon.boundary_set), len(lexicon.internal_set)
    bound = sum(nb * ni**j for j in range(depth))
    if bound > limit:
        raise TractabilityError(
            f"enumeration could reach {bound:.3g} words at depth {depth} (limit {limit:.0e})")
    context = tuple(lexicon.check(t) for t in context)
    internal = lexicon.internal_ids
    initial = word_initial_distribution(lexicon, model.next_token_distribution(context))
    frontier = [((int(t),), float(initial[t])) for t in np.flatnonzero(initial)]
    words = []
    total = 0.0
    for level in range(1, depth + 1):
        nxt = []
        for word, p in frontier:
            dist = model.next_token_distribution(context + word)
            eow = boundary_mass(lexicon, dist)
            if eow > 0:
                words.append((word, p * eow))
                total += p * eow
            if level < depth:
                for t in internal:
                    if dist[t] > 0:
                        nxt.append((word + (int(t),), p * float(dist[t])))
        frontier = nxt
    residual = 1.0 - total
    return WordEnumeration(tuple(words), min(max(residual, 0.0), 1.0), depth)


def _exact(enumeration: WordEnumeration, fn, tol: float) -> ExactResult:
    bits = fn(enumeration.probs)
    return ExactResult(bits, enumeration.residual_mass, enumeration.residual_mass >= tol)


def exact_shannon(enumeration: WordEnumeration, tol: float = RESIDUAL_TOL) -> ExactResult:
    return _exact(enumeration, _shannon, tol)


def exact_renyi(enumeration: WordEnumeration, alpha: float, tol: float = RESIDUAL_TOL) -> ExactResult:
    alpha = check_order(alpha)
    return _exact(enumeration, lambda p: _renyi(p, alpha), tol)
