"""Synthetic reading-time data with known generating coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wordentropy.analysis import ItemPredictors, RegressionDataset, assign_heldout


@dataclass
class SimulatedStudy:
    dataset: RegressionDataset
    items: dict
    entropy: dict[str, dict]


def simulate_study(rng: np.random.Generator, entropy_coef: float = 0.0, n_subjects: int = 8, n_docs: int = 6,
                   n_words: int = 25, n_entropy: int = 2, noise_sd: float = 40.0,
                   heldout_frac: float = 1 / 3, with_fixation: bool = False) -> SimulatedStudy:
    """Reading times driven by the baseline predictors and, if `entropy_coef` != 0,
    by entropy column ``ent0`` (in ms per standard deviation of that column).

    Columns ``ent1``, ``ent2``, ... are always pure noise.
    """
    items = {}
    entropy = {f"ent{j}": {} for j in range(n_entropy)}
    for d in range(n_docs):
        prev = None
        for i in range(n_words):
            key = (f"doc{d}", i)
            surprisal = float(rng.gamma(2.0, 3.0))
            items[key] = ItemPredictors(float(rng.integers(1, 12)), float(i), float(rng.normal(11, 2)), surprisal, prev)
            prev = surprisal
            for name in entropy:
                entropy[name][key] = float(rng.normal(3.0, 1.0))
    subject_shift = rng.normal(0, 30, n_subjects)
    subjects, docs, idxs, rts, fix = [], [], [], [], []
    for s in range(n_subjects):
        for (doc, i), it in items.items():
            prev = it.prev_surprisal or 0.0
            fixated = int(rng.random() < 0.6)
            rt = (300 + 4 * it.length + 8 * it.surprisal + 4 * prev - 2 * it.unigram + 15 * fixated
                  + subject_shift[s] + entropy_coef * (entropy["ent0"][(doc, i)] - 3.0)
                  + rng.normal(0, noise_sd))
            subjects.append(f"s{s}")
            docs.append(doc)
            idxs.append(i)
            rts.append(rt)
            fix.append(fixated)
    keys = list(zip(docs, idxs))
    dataset = RegressionDataset(
        subjects=np.array(subjects, dtype=object), docs=np.array(docs, dtype=object), word_indices=np.array(idxs),
        rt=np.array(rts), heldout=assign_heldout(keys, heldout_frac, int(rng.integers(2**32))),
        prev_fixated=np.array(fix, dtype=float) if with_fixation else None,
    )
    return SimulatedStudy(dataset, items, entropy)


def write_demo_files(directory, seed: int = 0, n_docs: int = 4, n_words: int = 40, n_subjects: int = 6,
                     entropy_coef: float = 25.0, truth_samples: int = 1000) -> dict:
    """Write a self-consistent demo set (lexicon, lm, corpus, rt, unigram TSVs) to `directory`.

    Text is sampled from a random bigram model; reading times depend on the
    words' MC Shannon entropy with `entropy_coef` ms per bit. Returns the paths.
    """
    from pathlib import Path

    from wordentropy.estimators import mc_shannon
    from wordentropy.lexicon import write_lexicon
    from wordentropy.lm import write_ngram_model
    from wordentropy.sampler import SamplerConfig, sample_set, sample_word, score_word
    from wordentropy.toy import random_model

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    while True:
        model = random_model(rng, max_boundary=6, max_internal=4, max_order=2, sparsity=0.5, boundary_floor=0.5)
        if model.order == 2 and len(model.lexicon.internal_set) >= 2 and len(model.lexicon.boundary_set) >= 3:
            break
    lex = model.lexicon
    paths = {name: directory / f"{name}.tsv" for name in ("lexicon", "lm", "corpus", "rt", "unigram")}
    write_lexicon(lex, paths["lexicon"])
    write_ngram_model(model, paths["lm"])

    cfg = SamplerConfig(truth_samples, 20, seed)
    counts: dict[str, int] = {}
    rows = []
    stream = 0
    for d in range(n_docs):
        context: list[int] = []
        prev = None
        for i in range(n_words):
            word = sample_word(model, lex, context, SamplerConfig(1, 20, seed + 1), stream)
            stream += 1
            surface = "".join(lex.surface(t) for t in word.token_ids).replace("▁", "")
            ent = mc_shannon(sample_set(model, lex, context, cfg, context_index=stream)).bits
            surp = score_word(model, lex, context, word.token_ids)
            tag = "NN" if len(word.token_ids) > 1 else ("DT" if word.token_ids[0] % 2 else "IN")
            rows.append((f"doc{d}", i, surface, tag, word.token_ids, ent, surp, prev))
            counts[surface] = counts.get(surface, 0) + 1
            context.extend(word.token_ids)
            prev = surp

    with paths["corpus"].open("w", encoding="utf-8") as fh:
        fh.write("doc_id\tword_index\tword\tpos\ttokens\n")
        for doc, i, surface, tag, toks, *_ in rows:
            fh.write(f"{doc}\t{i}\t{surface}\t{tag}\t{','.join(map(str, toks))}\n")
    with paths["unigram"].open("w", encoding="utf-8") as fh:
        fh.write("word\tcount\n")
        for w in sorted(counts):
            fh.write(f"{w}\t{counts[w] * 10 + int(rng.integers(0, 5))}\n")
    shifts = rng.normal(0, 25, n_subjects)
    with paths["rt"].open("w", encoding="utf-8") as fh:
        fh.write("doc_id\tword_index\tsubject\trt_ms\tprev_fixated\n")
        for s in range(n_subjects):
            for doc, i, surface, _, toks, ent, surp, prev in rows:
                rt = (250 + 5 * len(surface) + 8 * surp + 4 * (prev or 0.0) + entropy_coef * ent
                      + shifts[s] + rng.normal(0, 30))
                fh.write(f"{doc}\t{i}\ts{s}\t{rt:.1f}\t{int(rng.random() < 0.6)}\n")
    return paths
