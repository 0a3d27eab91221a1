"""Estimator variance, reading-time regression comparison and per-tag summaries.

The regression harness is ordinary least squares with per-subject intercept
dummies; log likelihoods are Gaussian with the MLE residual variance.
"""

from __future__ import annotations

import csv
import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from wordentropy.errors import (
    CollinearityError,
    DegenerateFitError,
    SchemaError,
    ValidationError,
)
from wordentropy.estimators import renyi_from_surprisals
from wordentropy.lexicon import Lexicon
from wordentropy.sampler import SamplerConfig, sample_set

DEFAULT_KS = tuple(2**j for j in range(2, 12))
DEFAULT_N_BOOT = 1000
DEFAULT_N_PERM = 10000
DEFAULT_HELDOUT_FRAC = 1.0 / 3.0
DEFAULT_TOP_K = 10
VARIANCE_FLOOR = 1e-12
RESPONSE_KINDS = ("SPR", "FP", "GP")

# ---------------------------------------------------------------- variance


@dataclass(frozen=True)
class CVReport:
    """Coefficient of variation per sample count.

    `table[j, i]` is the CV for ``ks[j]`` at word position i (NaN where the
    CV was undefined); `cv[j]` averages the defined entries of row j.
    """

    ks: tuple[int, ...]
    cv: np.ndarray
    table: np.ndarray
    undefined: np.ndarray
    kind: str

    def as_dict(self) -> dict[int, float]:
        return {k: float(v) for k, v in zip(self.ks, self.cv)}


def _coefficient_of_variation(values: np.ndarray) -> float:
    mu = float(np.mean(values))
    sigma = float(np.std(values, ddof=1))
    if abs(mu) < 1e-12:
        return 0.0 if sigma < 1e-12 else math.nan
    return sigma / abs(mu)


def bootstrap_cv(model, lexicon: Lexicon, contexts: Sequence[Sequence[int]], kind: str = "shannon",
                 ks: Sequence[int] = DEFAULT_KS, n_boot: int = DEFAULT_N_BOOT,
                 config: SamplerConfig | None = None, alpha: float = 0.5,
                 context_indices: Sequence[int] | None = None) -> CVReport:
    """Bootstrap CV of the MC entropy estimate for each k in `ks`.

    For each context, S_k is the first k streams of its sample set (so the
    sets are nested across k). Each S_k is resampled `n_boot` times with
    replacement and the entropy recomputed; CV = sd / mean over resamples.
    """
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ValidationError("sample-count grid is empty")
    if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError(f"sample-count grid must be positive and strictly increasing, got {ks}")
    if n_boot < 2:
        raise ValidationError(f"n_boot must be >= 2, got {n_boot}")
    if kind not in ("shannon", "renyi"):
        raise ValidationError(f"unknown estimator kind {kind!r}")
    if kind == "renyi" and (alpha <= 0 or alpha == 1 or math.isinf(alpha)):
        raise ValidationError(f"bootstrap Rényi needs a finite order other than 0 and 1, got {alpha}")
    config = config or SamplerConfig()
    if context_indices is None:
        context_indices = range(len(contexts))
    base = SamplerConfig(max(ks), config.max_word_tokens, config.seed)
    table = np.empty((len(ks), len(contexts)))
    for i, (ctx, cidx) in enumerate(zip(contexts, context_indices)):
        s_all = sample_set(model, lexicon, ctx, base, context_index=cidx).surprisals
        for j, k in enumerate(ks):
            s = s_all[:k]
            rng = np.random.default_rng([config.seed, cidx, k])
            vals = np.empty(n_boot)
            chunk = max(1, 2_000_000 // k)
            for lo in range(0, n_boot, chunk):
                hi = min(n_boot, lo + chunk)
                resampled = s[rng.integers(0, k, size=(hi - lo, k))]
                if kind == "shannon":
                    vals[lo:hi] = resampled.mean(axis=1)
                else:
                    vals[lo:hi] = renyi_from_surprisals(resampled, alpha, axis=1)
            table[j, i] = _coefficient_of_variation(vals)
    undefined = np.isnan(table).sum(axis=1)
    with np.errstate(invalid="ignore"):
        cv = np.array([np.nanmean(row) if np.any(~np.isnan(row)) else math.nan for row in table])
    return CVReport(ks, cv, table, undefined, kind)


# ---------------------------------------------------------------- unigram


def load_unigram(path: str | Path) -> Counter:
    path = Path(path)
    counts: Counter = Counter()
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["word", "count"]:
            raise SchemaError(f"{path}:1: expected header 'word<TAB>count'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                c = int(row[1])
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: bad count {row[1]!r}") from None
            if c < 0:
                raise SchemaError(f"{path}:{lineno}: negative count")
            counts[row[0]] += c
    if not counts:
        raise ValidationError(f"{path}: no unigram counts")
    return counts


def unigram_surprisal(counts: Mapping[str, int], word: str) -> float:
    """Add-one smoothed surprisal: -log2((c(w) + 1) / (N + V + 1))."""
    if not counts:
        raise ValidationError("unigram counts are empty")
    total = sum(counts.values())
    types = len(counts)
    return math.log2((total + types + 1) / (counts.get(word, 0) + 1))


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class ItemPredictors:
    """Baseline predictors for one corpus word (doc, word_index)."""

    length: float
    index: float
    unigram: float
    surprisal: float
    prev_surprisal: float | None

    @property
    def doc_initial(self) -> bool:
        return self.prev_surprisal is None


@dataclass
class RegressionDataset:
    subjects: np.ndarray
    docs: np.ndarray
    word_indices: np.ndarray
    rt: np.ndarray
    heldout: np.ndarray
    prev_fixated: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.rt)
        for name in ("subjects", "docs", "word_indices", "heldout"):
            if len(getattr(self, name)) != n:
                raise SchemaError(f"column {name} has {len(getattr(self, name))} rows, expected {n}")
        if self.prev_fixated is not None and len(self.prev_fixated) != n:
            raise SchemaError("column prev_fixated has the wrong number of rows")

    def __len__(self) -> int:
        return len(self.rt)

    def items(self):
        return list(zip(self.docs.tolist(), self.word_indices.tolist()))


def assign_heldout(items: Sequence[tuple], heldout_frac: float = DEFAULT_HELDOUT_FRAC, seed: int = 0) -> np.ndarray:
    """Hash (doc, word_index) keys into the held-out partition with probability `heldout_frac`.

    Every row of an item lands in the same partition.
    """
    if not 0.0 < heldout_frac < 1.0:
        raise ValidationError(f"held-out fraction must lie strictly between 0 and 1, got {heldout_frac}")
    out = np.empty(len(items), dtype=bool)
    cache: dict = {}
    for r, key in enumerate(items):
        hit = cache.get(key)
        if hit is None:
            digest = hashlib.blake2b(f"{seed}\x1f{key[0]}\x1f{key[1]}".encode(), digest_size=8).digest()
            hit = int.from_bytes(digest, "big") / 2**64 < heldout_frac
            cache[key] = hit
        out[r] = hit
    return out


def load_rt(path: str | Path, heldout_frac: float = DEFAULT_HELDOUT_FRAC, seed: int = 0) -> RegressionDataset:
    """Read ``doc_id, word_index, subject, rt_ms[, prev_fixated]`` rows."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = [h.strip() for h in next(reader, [])]
        required = ["doc_id", "word_index", "subject", "rt_ms"]
        if header[:4] != required or (len(header) > 4 and header[4:] != ["prev_fixated"]):
            raise SchemaError(f"{path}:1: expected header {'<TAB>'.join(required)}[<TAB>prev_fixated], got {header}")
        has_fix = len(header) == 5
        subjects, docs, idxs, rts, fix = [], [], [], [], []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(header):
                raise SchemaError(f"{where}: expected {len(header)} fields, got {len(row)}")
            try:
                idx = int(row[1])
                rt = float(row[3])
            except ValueError:
                raise SchemaError(f"{where}: bad word_index or rt_ms") from None
            if not math.isfinite(rt):
                raise SchemaError(f"{where}: non-finite rt_ms")
            key = (row[0], idx, row[2])
            if key in seen:
                raise SchemaError(f"{where}: duplicate (doc, word_index, subject) row")
            seen.add(key)
            if has_fix:
                if row[4] not in ("0", "1"):
                    raise SchemaError(f"{where}: prev_fixated must be 0 or 1")
                fix.append(int(row[4]))
            docs.append(row[0])
            idxs.append(idx)
            subjects.append(row[2])
            rts.append(rt)
    if not rts:
        raise SchemaError(f"{path}: no reading-time rows")
    items = list(zip(docs, idxs))
    return RegressionDataset(
        subjects=np.array(subjects, dtype=object),
        docs=np.array(docs, dtype=object),
        word_indices=np.array(idxs),
        rt=np.array(rts),
        heldout=assign_heldout(items, heldout_frac, seed),
        prev_fixated=np.array(fix, dtype=float) if has_fix else None,
    )


# ---------------------------------------------------------------- design

BASELINE_CONTINUOUS = ("word_length", "word_index", "unigram_surprisal", "surprisal", "prev_surprisal")


@dataclass
class Design:
    columns: list[str]
    X_fit: np.ndarray
    y_fit: np.ndarray
    X_held: np.ndarray
    y_held: np.ndarray
    keys_fit: list = field(repr=False)
    keys_held: list = field(repr=False)

    def subset(self, columns: Sequence[str]) -> "Design":
        idx = [self.columns.index(c) for c in columns]
        return Design(list(columns), self.X_fit[:, idx], self.y_fit, self.X_held[:, idx], self.y_held,
                      self.keys_fit, self.keys_held)


def build_design(dataset: RegressionDataset, items: Mapping[tuple, ItemPredictors], response_kind: str = "SPR",
                 entropy: Mapping[tuple, float] | None = None, entropy_name: str = "entropy",
                 log_rt: bool = False) -> Design:
    """Design matrices for the fit and held-out partitions.

    Columns: intercept, z-scored baseline predictors (length, index, unigram
    surprisal, surprisal of current and previous word), previous-word
    fixation for FP/GP, reference-coded subject dummies and, if given, the
    z-scored entropy column (last). z-scoring uses fit-partition statistics only.
    Rows for document-initial words are dropped.
    """
    if response_kind not in RESPONSE_KINDS:
        raise ValidationError(f"response kind must be one of {RESPONSE_KINDS}, got {response_kind!r}")
    needs_fix = response_kind in ("FP", "GP")
    if needs_fix and dataset.prev_fixated is None:
        raise SchemaError(f"{response_kind} regression needs a prev_fixated column")

    all_keys = dataset.items()
    rows = []
    for r, key in enumerate(all_keys):
        pred = items.get(key)
        if pred is None:
            raise SchemaError(f"reading-time row for {key} has no matching corpus word")
        if pred.doc_initial:
            continue
        if entropy is not None and key not in entropy:
            raise SchemaError(f"no entropy value for {key}")
        rows.append(r)
    rows = np.array(rows, dtype=int)
    if rows.size == 0:
        raise SchemaError("no regression rows left after dropping document-initial words")

    keys = [all_keys[r] for r in rows]
    cont = {
        "word_length": [items[k].length for k in keys],
        "word_index": [items[k].index for k in keys],
        "unigram_surprisal": [items[k].unigram for k in keys],
        "surprisal": [items[k].surprisal for k in keys],
        "prev_surprisal": [items[k].prev_surprisal for k in keys],
    }
    held = dataset.heldout[rows]
    fit = ~held
    if not fit.any() or not held.any():
        raise ValidationError("both the fit and held-out partitions need at least one row")

    def zscore(name, values):
        v = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"predictor {name} has non-finite values")
        mu, sd = v[fit].mean(), v[fit].std()
        return (v - mu) / (sd if sd > 0 else 1.0)

    columns = ["intercept", *cont]
    mats = [np.ones(rows.size)] + [zscore(name, values) for name, values in cont.items()]
    if needs_fix:
        columns.append("prev_fixated")
        mats.append(dataset.prev_fixated[rows].astype(float))
    subjects = dataset.subjects[rows]
    for s in sorted(set(subjects.tolist()))[1:]:
        columns.append(f"subject[{s}]")
        mats.append((subjects == s).astype(float))
    if entropy is not None:
        columns.append(entropy_name)
        mats.append(zscore(entropy_name, [entropy[k] for k in keys]))
    X = np.column_stack(mats)

    y = dataset.rt[rows].astype(float)
    if log_rt:
        if np.any(y <= 0):
            raise ValidationError("log transform needs positive reading times")
        y = np.log(y)
    row_keys = [(dataset.subjects[r], *all_keys[r]) for r in rows]
    return Design(columns, X[fit], y[fit], X[held], y[held],
                  [k for k, f in zip(row_keys, fit) if f], [k for k, h in zip(row_keys, held) if h])


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class FitResult:
    columns: tuple[str, ...]
    coefficients: np.ndarray
    sigma2: float
    loglik: float
    n: int

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])


def gaussian_loglik(residuals: np.ndarray, sigma2: float) -> float:
    n = residuals.size
    return float(-0.5 * n * math.log(2 * math.pi * sigma2) - 0.5 * np.sum(residuals**2) / sigma2)


def _dependent_columns(X: np.ndarray, columns: Sequence[str]) -> list[str]:
    kept: list[int] = []
    bad = []
    for j in range(X.shape[1]):
        if np.linalg.matrix_rank(X[:, kept + [j]]) > len(kept):
            kept.append(j)
        else:
            bad.append(columns[j])
    return bad


def fit_linear_model(X, y, columns: Sequence[str] | None = None) -> FitResult:
    """OLS fit with Gaussian log likelihood at the MLE variance (RSS / n)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    columns = tuple(columns) if columns is not None else tuple(f"x{j}" for j in range(p))
    if n <= p:
        raise ValidationError(f"need more rows than columns, got {n} rows and {p} columns")
    if np.linalg.matrix_rank(X) < p:
        bad = _dependent_columns(X, columns)
        raise CollinearityError(f"design is rank deficient; linearly dependent columns: {', '.join(bad)}", bad)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    sigma2 = float(np.mean(resid**2))
    if sigma2 < VARIANCE_FLOOR:
        raise DegenerateFitError(f"residual variance {sigma2:.3g} below floor {VARIANCE_FLOOR}; response is an exact linear function of the predictors")
    return FitResult(columns, beta, sigma2, gaussian_loglik(resid, sigma2), n)


def heldout_loglik(fit: FitResult, X, y) -> float:
    """Log likelihood of new rows under the fitted coefficients and fit variance."""
    X = np.asarray(X, dtype=float)
    return gaussian_loglik(np.asarray(y, dtype=float) - X @ fit.coefficients, fit.sigma2)


def squared_errors(fit: FitResult, X, y) -> np.ndarray:
    return (np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ fit.coefficients) ** 2


def delta_ll(baseline: FitResult, extended: FitResult, baseline_design: Design, extended_design: Design) -> float:
    """Held-out LL(extended) - held-out LL(baseline). Negative values are allowed."""
    if (baseline_design.keys_held != extended_design.keys_held
            or not np.array_equal(baseline_design.y_held, extended_design.y_held)):
        raise ValidationError("baseline and extended designs have different held-out rows")
    return (heldout_loglik(extended, extended_design.X_held, extended_design.y_held)
            - heldout_loglik(baseline, baseline_design.X_held, baseline_design.y_held))


# ---------------------------------------------------------------- permutation


@dataclass(frozen=True)
class PermutationResult:
    statistic: float
    p_value: float
    n_perm: int


def paired_permutation_test(errors_a, errors_b, n_perm: int = DEFAULT_N_PERM, seed: int = 0,
                            groups: Sequence | None = None) -> PermutationResult:
    """Two-sided sign-flip test on mean(errors_a - errors_b).

    p = (1 + #{|stat*| >= |stat|}) / (n_perm + 1); the +1 counts the
    observed (identity) assignment. With `groups`, all differences sharing a
    group label are flipped together (use for repeated measures of an item).
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"error vectors must be 1-d and equal length, got {a.shape} and {b.shape}")
    if n_perm < 1:
        raise ValidationError(f"n_perm must be >= 1, got {n_perm}")
    if a.size == 0:
        raise ValidationError("error vectors are empty")
    d = a - b
    n = d.size
    stat = float(d.mean())
    if groups is not None:
        if len(groups) != n:
            raise ValidationError(f"{len(groups)} group labels for {n} differences")
        _, inverse = np.unique([repr(g) for g in groups], return_inverse=True)
        d = np.bincount(inverse.ravel(), weights=d)
    # relative slack so that ties are not lost to rounding in the row sums
    threshold = abs(stat) - 1e-12 * max(1.0, float(np.abs(d).mean()))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, 4_000_000 // d.size)
    for lo in range(0, n_perm, chunk):
        m = min(chunk, n_perm - lo)
        signs = rng.integers(0, 2, size=(m, d.size), dtype=np.int8) * 2 - 1
        hits += int(np.count_nonzero(np.abs(signs @ d) / n >= threshold))
    return PermutationResult(stat, (1 + hits) / (n_perm + 1), n_perm)


# ---------------------------------------------------------------- tags


@dataclass(frozen=True)
class TagStat:
    tag: str
    count: int
    mean: float
    sem: float | None


def aggregate_by_tag(entropies: Sequence[float], tags: Sequence[str], top_k: int | None = DEFAULT_TOP_K) -> list[TagStat]:
    """Mean and SEM of entropy per tag, most frequent tags first (ties by tag name)."""
    e = np.asarray(entropies, dtype=float)
    if e.size == 0:
        raise ValidationError("no entropies to aggregate")
    if len(tags) != e.size:
        raise ValidationError(f"{e.size} entropies but {len(tags)} tags")
    groups: dict[str, list[float]] = {}
    for value, tag in zip(e.tolist(), tags):
        groups.setdefault(tag, []).append(value)
    order = sorted(groups, key=lambda t: (-len(groups[t]), t))
    if top_k is not None:
        order = order[:top_k]
    out = []
    for tag in order:
        v = np.array(groups[tag])
        sem = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else None
        out.append(TagStat(tag, int(v.size), float(v.mean()), sem))
    return out
