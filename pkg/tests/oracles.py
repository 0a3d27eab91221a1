"""Brute-force reference computations, written without the package's helpers."""

import itertools
import math


def word_prob(model, context, word):
    """Probability of a complete word, multiplying raw next-token probabilities."""
    lex = model.lexicon
    boundary = [e.id for e in lex.entries if e.boundary]
    dist = model.next_token_distribution(list(context))
    total_b = sum(float(dist[t]) for t in boundary)
    prob = float(dist[word[0]]) / total_b
    prefix = list(context) + [word[0]]
    for t in word[1:]:
        prob *= float(model.next_token_distribution(prefix)[t])
        prefix.append(t)
    dist = model.next_token_distribution(prefix)
    return prob * sum(float(dist[t]) for t in boundary)


def all_words(model, context, depth):
    """Every word of at most `depth` tokens mapped to its probability (zeros dropped)."""
    lex = model.lexicon
    boundary = [e.id for e in lex.entries if e.boundary]
    internal = [e.id for e in lex.entries if not e.boundary]
    out = {}
    for length in range(1, depth + 1):
        for first in boundary:
            for rest in itertools.product(internal, repeat=length - 1):
                w = (first, *rest)
                p = word_prob(model, context, w)
                if p > 0:
                    out[w] = p
    return out


def shannon(probs):
    return -sum(p * math.log2(p) for p in probs if p > 0)


def renyi(probs, alpha):
    probs = [p for p in probs if p > 0]
    if alpha == 1:
        return shannon(probs)
    if alpha == math.inf:
        return -math.log2(max(probs))
    if alpha == 0:
        return math.log2(len(probs))
    return math.log2(sum(p**alpha for p in probs)) / (1 - alpha)


def binary_entropy(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


# Toy model A in closed form: first token ▁a/▁b with 2/3, 1/3; each further
# step continues with x (0.25) or stops (0.75), so length is geometric.
TOY_A_SHANNON = binary_entropy(1 / 3) + binary_entropy(0.25) / 0.75
TOY_A_RENYI_HALF = 2 * math.log2(math.sqrt(0.75) * (math.sqrt(2 / 3) + math.sqrt(1 / 3)) / (1 - math.sqrt(0.25)))
