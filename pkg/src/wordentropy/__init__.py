"""Word-level contextual entropy over subword language models."""

from wordentropy.lexicon import Lexicon, TokenEntry, build_lexicon, load_lexicon
from wordentropy.lm import (
    EOW,
    NGramModel,
    boundary_mass,
    continuation_distribution,
    load_ngram_model,
    next_token_distribution,
    word_initial_distribution,
)
from wordentropy.sampler import SampleSet, SamplerConfig, WordSample, sample_set, sample_word, score_word
from wordentropy.estimators import (
    EntropyEstimate,
    WordEnumeration,
    enumerate_words,
    exact_renyi,
    exact_shannon,
    first_token_renyi,
    first_token_shannon,
    mc_renyi,
    mc_shannon,
)

__version__ = "0.1.0"
