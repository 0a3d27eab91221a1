"""Corpus files and per-word estimation over whole documents."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from wordentropy.analysis import ItemPredictors, unigram_surprisal
from wordentropy.errors import SchemaError, UnknownTokenError, ValidationError
from wordentropy.estimators import first_token_renyi, first_token_shannon, mc_renyi, mc_shannon
from wordentropy.lexicon import DEFAULT_MARKER, Lexicon, segment_word
from wordentropy.sampler import SamplerConfig, sample_set, score_word


@dataclass(frozen=True)
class CorpusWord:
    doc_id: str
    word_index: int
    word: str
    tokens: tuple[int, ...]
    pos: str | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.word_index)


@dataclass(frozen=True)
class Corpus:
    words: tuple[CorpusWord, ...]
    tagged: bool

    def __len__(self) -> int:
        return len(self.words)

    def contexts(self) -> list[tuple[int, ...]]:
        """Token-id prefix preceding each word within its document."""
        out = []
        prefix: list[int] = []
        doc = None
        for w in self.words:
            if w.doc_id != doc:
                doc, prefix = w.doc_id, []
            out.append(tuple(prefix))
            prefix.extend(w.tokens)
        return out


def load_corpus(path: str | Path, lexicon: Lexicon, marker: str = DEFAULT_MARKER) -> Corpus:
    """Read ``doc_id<TAB>word_index<TAB>word`` plus optional ``pos`` and ``tokens`` columns.

    ``tokens`` holds comma-joined token ids; without it each word is split by
    greedy longest match against the lexicon. Words are ordered by document
    (first appearance) then word index.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = [h.strip() for h in next(reader, [])]
        if header[:3] != ["doc_id", "word_index", "word"] or not set(header[3:]) <= {"pos", "tokens"} \
                or len(set(header)) != len(header):
            raise SchemaError(f"{path}:1: expected header doc_id<TAB>word_index<TAB>word[<TAB>pos][<TAB>tokens], got {header}")
        col = {name: i for i, name in enumerate(header)}
        words = []
        seen = set()
        doc_order: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(header):
                raise SchemaError(f"{where}: expected {len(header)} fields, got {len(row)}")
            try:
                idx = int(row[1])
            except ValueError:
                raise SchemaError(f"{where}: bad word_index {row[1]!r}") from None
            key = (row[0], idx)
            if key in seen:
                raise SchemaError(f"{where}: duplicate (doc_id, word_index) {key}")
            seen.add(key)
            doc_order.setdefault(row[0], len(doc_order))
            try:
                if "tokens" in col:
                    tokens = tuple(lexicon.check(int(t)) for t in row[col["tokens"]].split(","))
                    if not lexicon.boundary_mask[tokens[0]] or any(lexicon.boundary_mask[t] for t in tokens[1:]):
                        raise ValidationError("tokens must be one boundary token followed by internal tokens")
                else:
                    tokens = tuple(segment_word(lexicon, row[2], marker))
            except (ValueError, UnknownTokenError) as exc:
                raise SchemaError(f"{where}: {exc}") from None
            pos = row[col["pos"]] if "pos" in col else None
            words.append(CorpusWord(row[0], idx, row[2], tokens, pos))
    if not words:
        raise SchemaError(f"{path}: no corpus rows")
    words.sort(key=lambda w: (doc_order[w.doc_id], w.word_index))
    return Corpus(tuple(words), "pos" in col)


@dataclass(frozen=True)
class EstimateRow:
    doc_id: str
    word_index: int
    word: str
    ft_shannon: float
    ft_renyi: float
    mc_shannon: float
    mc_shannon_stderr: float | None
    mc_renyi: float
    mc_renyi_stderr: float | None
    surprisal: float
    truncated_count: int


ESTIMATE_COLUMNS = tuple(EstimateRow.__dataclass_fields__)


def estimate_word(model, lexicon: Lexicon, word: CorpusWord, context: Sequence[int], context_index: int,
                  config: SamplerConfig, alpha: float, n_boot: int) -> EstimateRow:
    dist = model.next_token_distribution(context)
    samples = sample_set(model, lexicon, context, config, context_index=context_index)
    sh = mc_shannon(samples)
    if alpha == 1.0:
        re_ = sh
    else:
        re_ = mc_renyi(samples, alpha, n_boot=n_boot, seed=[config.seed, context_index])
    return EstimateRow(
        word.doc_id, word.word_index, word.word,
        first_token_shannon(dist), first_token_renyi(dist, alpha),
        sh.bits, sh.stderr_bits, re_.bits, re_.stderr_bits,
        score_word(model, lexicon, context, word.tokens), samples.truncated_count,
    )


def estimate_corpus(model, lexicon: Lexicon, corpus: Corpus, config: SamplerConfig, alpha: float = 0.5,
                    n_boot: int = 1000, workers: int | None = None) -> list[EstimateRow]:
    """Entropy estimates for every corpus word. Word k uses context index k for its sample streams."""
    contexts = corpus.contexts()

    def one(k):
        return estimate_word(model, lexicon, corpus.words[k], contexts[k], k, config, alpha, n_boot)

    if workers is None or workers <= 1:
        return [one(k) for k in range(len(corpus))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(corpus))))


def item_predictors(model, lexicon: Lexicon, corpus: Corpus, unigram: Mapping[str, int]) -> dict[tuple, ItemPredictors]:
    """Baseline regression predictors for each corpus word, keyed by (doc_id, word_index)."""
    out = {}
    prev_doc = None
    prev_surprisal: float | None = None
    for w, ctx in zip(corpus.words, corpus.contexts()):
        if w.doc_id != prev_doc:
            prev_doc, prev_surprisal = w.doc_id, None
        s = score_word(model, lexicon, ctx, w.tokens)
        out[w.key] = ItemPredictors(float(len(w.word)), float(w.word_index), unigram_surprisal(unigram, w.word),
                                    s, prev_surprisal)
        prev_surprisal = s
    return out


def read_estimates(path: str | Path) -> list[dict]:
    """Read a table written by the ``estimate`` command (``#`` lines skipped)."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines, delimiter="\t", quoting=csv.QUOTE_NONE)
    if reader.fieldnames is None or not set(ESTIMATE_COLUMNS) <= set(reader.fieldnames):
        raise SchemaError(f"{path}: not an estimate table (columns {reader.fieldnames})")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            row["word_index"] = int(row["word_index"])
            for name in ("ft_shannon", "ft_renyi", "mc_shannon", "mc_renyi", "surprisal"):
                row[name] = float(row[name])
        except ValueError:
            raise SchemaError(f"{path}: bad numeric value near data line {lineno}") from None
        rows.append(row)
    return rows
