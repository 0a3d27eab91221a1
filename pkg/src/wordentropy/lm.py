"""Next-token distributions and the word-boundary views derived from them.

`NGramModel` is the reference provider. Anything exposing
``next_token_distribution(context)`` (context = sequence of token ids, BOS
implicit) and a ``lexicon`` attribute can stand in for it.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from wordentropy.errors import DegenerateDistributionError, UnknownTokenError, ValidationError
from wordentropy.lexicon import Lexicon

BOS = -1
BOS_SYMBOL = "<s>"
EOW = "EOW"

PROPER_TOL = 1e-9
RENORM_TOL = 1e-6


def as_distribution(probs, size: int | None = None, where: str = "distribution") -> np.ndarray:
    """Check a probability vector, renormalizing small rounding drift."""
    p = np.array(probs, dtype=float)
    if p.ndim != 1 or (size is not None and p.shape[0] != size):
        raise ValidationError(f"{where}: expected a vector of length {size}, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError(f"{where}: probabilities must be finite and non-negative")
    dev = abs(p.sum() - 1.0)
    if dev > RENORM_TOL:
        raise ValidationError(f"{where}: probabilities sum to {p.sum():.9g}, not 1")
    if dev > PROPER_TOL:
        p /= p.sum()
    p.setflags(write=False)
    return p


@dataclass(frozen=True, eq=False)
class NGramModel:
    """Interpolated n-gram over token ids.

    For a context, the longest stored suffix (at most ``order - 1`` ids, BOS
    included) is blended as ``lam * table + (1 - lam) * unigram``; when no
    suffix matches, the unigram table is returned unchanged.
    """

    lexicon: Lexicon
    order: int
    tables: dict
    lam: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError(f"order must be >= 1, got {self.order}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"interpolation weight must lie in [0, 1], got {self.lam}")
        if () not in self.tables:
            raise ValidationError("model has no unconditional (empty-context) table")
        n = len(self.lexicon)
        clean = {}
        for key, probs in self.tables.items():
            key = tuple(int(t) for t in key)
            if len(key) > self.order - 1:
                raise ValidationError(f"context {key} longer than order - 1 = {self.order - 1}")
            for pos, t in enumerate(key):
                if t == BOS and pos != 0:
                    raise ValidationError(f"context {key}: BOS may only appear first")
                if t != BOS:
                    self.lexicon.check(t)
            clean[key] = as_distribution(probs, n, where=f"context {key}")
        object.__setattr__(self, "tables", clean)

    @property
    def unigram(self) -> np.ndarray:
        return self.tables[()]

    def next_token_distribution(self, context: Sequence[int]) -> np.ndarray:
        return next_token_distribution(self, context)


def next_token_distribution(model: NGramModel, context: Sequence[int]) -> np.ndarray:
    """P(t | context) as a read-only vector indexed by token id."""
    check = model.lexicon.check
    ids = [check(t) for t in context]
    full = (BOS, *ids)
    width = min(model.order - 1, len(full))
    suffix = full[len(full) - width:] if width else ()
    cached = model._cache.get(suffix)
    if cached is not None:
        return cached
    dist = model.unigram
    for start in range(len(suffix)):
        table = model.tables.get(suffix[start:])
        if table is not None:
            if model.lam < 1.0:
                dist = model.lam * table + (1.0 - model.lam) * model.unigram
                dist.setflags(write=False)
            else:
                dist = table
            break
    model._cache[suffix] = dist
    return dist


def boundary_mass(lexicon: Lexicon, dist: np.ndarray) -> float:
    """Total probability of word-initial tokens, i.e. P(EOW) for an in-progress word."""
    return float(np.sum(dist[lexicon.boundary_mask]))


def word_initial_distribution(lexicon: Lexicon, dist: np.ndarray) -> np.ndarray:
    """`dist` restricted to boundary tokens and renormalized (internal ids get 0)."""
    mass = boundary_mass(lexicon, dist)
    if mass <= 0.0:
        raise DegenerateDistributionError("no probability mass on word-initial tokens")
    out = np.where(lexicon.boundary_mask, dist, 0.0) / mass
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ContinuationDistribution:
    """Distribution over internal tokens plus end-of-word.

    `internal` is indexed by token id with boundary entries zeroed.
    """

    internal: np.ndarray
    eow: float

    def __getitem__(self, key) -> float:
        if isinstance(key, str) and key == EOW:
            return self.eow
        return float(self.internal[key])

    def total(self) -> float:
        return float(self.internal.sum()) + self.eow

    def as_dict(self, lexicon: Lexicon) -> dict:
        out = {int(t): float(self.internal[t]) for t in lexicon.internal_ids}
        out[EOW] = self.eow
        return out


def continuation_distribution(lexicon: Lexicon, dist: np.ndarray) -> ContinuationDistribution:
    internal = np.where(lexicon.boundary_mask, 0.0, dist)
    internal.setflags(write=False)
    return ContinuationDistribution(internal, boundary_mass(lexicon, dist))


def _parse_context(raw: str, lexicon: Lexicon, where: str) -> tuple[int, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    out = []
    for piece in raw.split(","):
        piece = piece.strip()
        if piece == BOS_SYMBOL:
            out.append(BOS)
            continue
        try:
            tid = int(piece)
        except ValueError:
            raise ValidationError(f"{where}: bad context token {piece!r}") from None
        try:
            lexicon.check(tid)
        except UnknownTokenError:
            raise UnknownTokenError(f"{where}: unknown token id {tid} in context") from None
        out.append(tid)
    return tuple(out)


def load_ngram_model(path: str | Path, lexicon: Lexicon, lam: float = 1.0, order: int | None = None) -> NGramModel:
    """Read ``context<TAB>token_id<TAB>prob`` rows.

    Context is a comma-joined id sequence (empty for the unigram table); the
    literal ``<s>`` may lead a context to anchor it at the start of a document.
    Unlisted tokens in a context get probability 0. `order` defaults to one
    more than the longest context in the file.
    """
    path = Path(path)
    n = len(lexicon)
    rows: dict[tuple, np.ndarray] = defaultdict(lambda: np.zeros(n))
    first_line: dict[tuple, int] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file")
        if [h.strip() for h in header] != ["context", "token_id", "prob"]:
            raise ValidationError(f"{path}:1: expected header 'context<TAB>token_id<TAB>prob', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            if len(row) != 3:
                raise ValidationError(f"{where}: expected 3 fields, got {len(row)}")
            ctx = _parse_context(row[0], lexicon, where)
            try:
                tid = int(row[1])
                prob = float(row[2])
            except ValueError:
                raise ValidationError(f"{where}: bad token id or probability") from None
            try:
                lexicon.check(tid)
            except UnknownTokenError:
                raise UnknownTokenError(f"{where}: unknown token id {tid}") from None
            if not (0.0 <= prob <= 1.0):
                raise ValidationError(f"{where}: probability {prob} outside [0, 1]")
            first_line.setdefault(ctx, lineno)
            rows[ctx][tid] += prob
    if () not in rows:
        raise ValidationError(f"{path}: no unconditional table (rows with empty context)")
    tables = {}
    for ctx, probs in rows.items():
        try:
            tables[ctx] = as_distribution(probs, n, where=f"{path}:{first_line[ctx]}: context {ctx}")
        except ValidationError:
            raise
    if order is None:
        order = 1 + max(len(c) for c in tables)
    return NGramModel(lexicon, order, tables, lam)


def write_ngram_model(model: NGramModel, path: str | Path) -> None:
    def fmt(ctx):
        return ",".join(BOS_SYMBOL if t == BOS else str(t) for t in ctx)

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("context\ttoken_id\tprob\n")
        for ctx in sorted(model.tables, key=lambda c: (len(c), c)):
            probs = model.tables[ctx]
            for tid in np.flatnonzero(probs):
                fh.write(f"{fmt(ctx)}\t{tid}\t{float(probs[tid])!r}\n")
