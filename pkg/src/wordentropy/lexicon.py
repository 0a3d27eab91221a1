"""Subword vocabulary split into word-initial (boundary) and word-internal tokens."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from wordentropy.errors import UnknownTokenError, ValidationError

DEFAULT_MARKER = "▁"  # "▁", sentencepiece-style word-start marker


@dataclass(frozen=True)
class TokenEntry:
    id: int
    surface: str
    boundary: bool


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[TokenEntry, ...]
    boundary_set: frozenset[int]
    internal_set: frozenset[int]
    boundary_mask: np.ndarray = field(repr=False, compare=False)
    _by_surface: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def boundary_ids(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def internal_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def is_boundary(self, token_id: int) -> bool:
        return is_boundary(self, token_id)

    def check(self, token_id: int) -> int:
        if not isinstance(token_id, (int, np.integer)) or not 0 <= token_id < len(self.entries):
            raise UnknownTokenError(f"unknown token id {token_id!r}")
        return int(token_id)

    def surface(self, token_id: int) -> str:
        return self.entries[self.check(token_id)].surface

    def id_of(self, surface: str) -> int:
        try:
            return self._by_surface[surface]
        except KeyError:
            raise UnknownTokenError(f"unknown token surface {surface!r}") from None

    def surfaces(self):
        return self._by_surface


def build_lexicon(entries: Iterable[TokenEntry]) -> Lexicon:
    """Validate `entries` and compute the boundary/internal partition.

    Ids must be unique and dense (0..N-1, in any input order) so that token
    distributions can be plain arrays indexed by id.
    """
    entries = list(entries)
    if not entries:
        raise ValidationError("lexicon has no entries")
    by_id: dict[int, TokenEntry] = {}
    by_surface: dict[str, int] = {}
    for e in entries:
        if not isinstance(e.id, (int, np.integer)) or e.id < 0:
            raise ValidationError(f"token id must be a non-negative integer, got {e.id!r}")
        if not e.surface:
            raise ValidationError(f"token {e.id} has an empty surface")
        if e.id in by_id:
            raise ValidationError(f"duplicate token id {e.id}")
        if e.surface in by_surface:
            raise ValidationError(f"duplicate token surface {e.surface!r} (ids {by_surface[e.surface]} and {e.id})")
        by_id[e.id] = e
        by_surface[e.surface] = e.id
    n = len(entries)
    if set(by_id) != set(range(n)):
        missing = sorted(set(range(n)) - set(by_id))
        raise ValidationError(f"token ids must be dense 0..{n - 1}; missing {missing[:5]}")
    ordered = tuple(by_id[i] for i in range(n))
    mask = np.array([e.boundary for e in ordered], dtype=bool)
    mask.setflags(write=False)
    boundary = frozenset(int(i) for i in np.flatnonzero(mask))
    if not boundary:
        raise ValidationError("lexicon has no boundary (word-initial) tokens; no word can begin")
    internal = frozenset(range(n)) - boundary
    return Lexicon(ordered, boundary, internal, mask, by_surface)


def is_boundary(lexicon: Lexicon, token_id: int) -> bool:
    return bool(lexicon.boundary_mask[lexicon.check(token_id)])


def _parse_flag(raw: str, where: str) -> bool:
    if raw not in ("0", "1"):
        raise ValidationError(f"{where}: boundary must be 0 or 1, got {raw!r}")
    return raw == "1"


def load_lexicon(path: str | Path, marker: str | None = None) -> Lexicon:
    """Read a ``id<TAB>surface<TAB>boundary`` file.

    With `marker` set, or when the file has no ``boundary`` column, the flag is
    inferred from whether the surface starts with the marker (default "▁").
    """
    path = Path(path)
    entries = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header[:2] != ["id", "surface"] or (len(header) > 2 and header[2] != "boundary"):
            raise ValidationError(f"{path}:1: expected header 'id<TAB>surface<TAB>boundary', got {header}")
        infer = marker is not None or len(header) < 3
        marker = DEFAULT_MARKER if marker is None else marker
        seen_ids: dict[int, int] = {}
        seen_surfaces: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(header):
                raise ValidationError(f"{where}: expected {len(header)} fields, got {len(row)}")
            try:
                tid = int(row[0])
            except ValueError:
                raise ValidationError(f"{where}: bad token id {row[0]!r}") from None
            surface = row[1]
            if not surface:
                raise ValidationError(f"{where}: empty surface")
            if tid in seen_ids:
                raise ValidationError(f"{where}: duplicate id {tid} (first on line {seen_ids[tid]})")
            if surface in seen_surfaces:
                raise ValidationError(f"{where}: duplicate surface {surface!r} (first on line {seen_surfaces[surface]})")
            seen_ids[tid] = lineno
            seen_surfaces[surface] = lineno
            flag = surface.startswith(marker) if infer else _parse_flag(row[2], where)
            entries.append(TokenEntry(tid, surface, flag))
    try:
        return build_lexicon(entries)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("id\tsurface\tboundary\n")
        for e in lexicon.entries:
            fh.write(f"{e.id}\t{e.surface}\t{int(e.boundary)}\n")


def segment_word(lexicon: Lexicon, word: str, marker: str = DEFAULT_MARKER) -> list[int]:
    """Split a whitespace-delimited word into token ids by greedy longest match.

    The first piece must be a boundary token; `marker` + word is tried before
    the bare word. Raises ValidationError if no segmentation exists.
    """
    surfaces = lexicon.surfaces()
    maxlen = max(len(s) for s in surfaces)
    for text in (marker + word, word):
        ids = []
        pos = 0
        while pos < len(text):
            for end in range(min(len(text), pos + maxlen), pos, -1):
                tid = surfaces.get(text[pos:end])
                if tid is not None and lexicon.boundary_mask[tid] == (pos == 0):
                    ids.append(tid)
                    pos = end
                    break
            else:
                break
        if pos == len(text) and ids:
            return ids
    raise ValidationError(f"cannot segment word {word!r} into lexicon tokens")
