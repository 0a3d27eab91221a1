"""``wordentropy`` command line: estimate, oracle, variance, regress, aggregate.

Every output is a TSV whose first line is a ``#`` comment echoing the run
configuration. Exit status: 0 success, 2 bad input or configuration, 1
internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from wordentropy.analysis import (
    DEFAULT_HELDOUT_FRAC,
    DEFAULT_KS,
    DEFAULT_N_BOOT,
    DEFAULT_N_PERM,
    DEFAULT_TOP_K,
    RESPONSE_KINDS,
    aggregate_by_tag,
    bootstrap_cv,
    build_design,
    delta_ll,
    fit_linear_model,
    heldout_loglik,
    load_rt,
    load_unigram,
    paired_permutation_test,
    squared_errors,
)
from wordentropy.corpus import ESTIMATE_COLUMNS, estimate_corpus, item_predictors, load_corpus, read_estimates
from wordentropy.errors import SchemaError, ValidationError, WordEntropyError
from wordentropy.estimators import (
    enumerate_words,
    exact_renyi,
    exact_shannon,
    first_token_renyi,
    first_token_shannon,
    mc_renyi,
    mc_shannon,
)
from wordentropy.lexicon import load_lexicon
from wordentropy.lm import load_ngram_model
from wordentropy.sampler import DEFAULT_MAX_WORD_TOKENS, DEFAULT_SAMPLES, SamplerConfig, sample_set

log = logging.getLogger("wordentropy")

VARIANTS = ("ft_shannon", "ft_renyi", "mc_shannon", "mc_renyi")


@dataclass
class RunConfig:
    lexicon: str | None = None
    lm: str | None = None
    corpus: str | None = None
    rt: str | None = None
    unigram: str | None = None
    estimates: str | None = None
    samples: int = DEFAULT_SAMPLES
    alpha: float = 0.5
    max_word_tokens: int = DEFAULT_MAX_WORD_TOKENS
    seed: int = 0
    depth: int = 20
    ks: list[int] = field(default_factory=lambda: list(DEFAULT_KS))
    n_boot: int = DEFAULT_N_BOOT
    n_perm: int = DEFAULT_N_PERM
    heldout_frac: float = DEFAULT_HELDOUT_FRAC
    lam: float = 1.0
    order: int | None = None
    marker: str | None = None
    response: str = "SPR"
    log_rt: bool = False
    variants: list[str] = field(default_factory=lambda: ["mc_shannon"])
    top_k: int = DEFAULT_TOP_K
    perm_by_item: bool = False
    threads: int | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**data)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.samples, self.max_word_tokens, self.seed)

    def validate(self) -> None:
        self.sampler()
        if not self.alpha > 0 or math.isinf(self.alpha):
            raise ValidationError(f"alpha must be a finite positive number, got {self.alpha}")
        if not 0.0 < self.heldout_frac < 1.0:
            raise ValidationError(f"heldout_frac must lie strictly between 0 and 1, got {self.heldout_frac}")
        if self.response not in RESPONSE_KINDS:
            raise ValidationError(f"response must be one of {RESPONSE_KINDS}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValidationError(f"unknown entropy variant {v!r}; choose from {VARIANTS}")
        if self.n_boot < 2:
            raise ValidationError(f"n_boot must be >= 2, got {self.n_boot}")
        if self.n_perm < 1:
            raise ValidationError(f"n_perm must be >= 1, got {self.n_perm}")
        if self.depth < 1:
            raise ValidationError(f"depth must be >= 1, got {self.depth}")

    def header(self, command: str) -> str:
        return (f"# wordentropy {command} samples={self.samples} alpha={self.alpha} "
                f"max_word_tokens={self.max_word_tokens} seed={self.seed} lambda={self.lam}")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}"
    return str(value)


def write_table(out, header: str, columns: Sequence[str], rows) -> None:
    out.write(header + "\n")
    out.write("\t".join(columns) + "\n")
    for row in rows:
        out.write("\t".join(fmt(v) for v in row) + "\n")


def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ValidationError(f"missing required input(s): {', '.join('--' + n for n in missing)}")


def _load_model(cfg: RunConfig):
    _need(cfg, "lexicon", "lm")
    lexicon = load_lexicon(cfg.lexicon, marker=cfg.marker)
    return lexicon, load_ngram_model(cfg.lm, lexicon, lam=cfg.lam, order=cfg.order)


def _contexts(cfg: RunConfig, lexicon):
    """Corpus words and their contexts, or a single empty context when no corpus is given."""
    if cfg.corpus is None:
        return [("", 0, "")], [()]
    corpus = load_corpus(cfg.corpus, lexicon, **({"marker": cfg.marker} if cfg.marker else {}))
    return [(w.doc_id, w.word_index, w.word) for w in corpus.words], corpus.contexts()


def _workers(cfg: RunConfig) -> int:
    return cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)


# ---------------------------------------------------------------- commands


def cmd_estimate(cfg: RunConfig, out) -> None:
    _need(cfg, "corpus")
    lexicon, model = _load_model(cfg)
    corpus = load_corpus(cfg.corpus, lexicon, **({"marker": cfg.marker} if cfg.marker else {}))
    rows = estimate_corpus(model, lexicon, corpus, cfg.sampler(), cfg.alpha, cfg.n_boot, _workers(cfg))
    truncated = sum(r.truncated_count for r in rows)
    if truncated:
        log.warning("%d sampled words hit the %d-token cap", truncated, cfg.max_word_tokens)
    write_table(out, cfg.header("estimate"), ESTIMATE_COLUMNS, (tuple(asdict(r).values()) for r in rows))


def cmd_oracle(cfg: RunConfig, out) -> None:
    lexicon, model = _load_model(cfg)
    labels, contexts = _contexts(cfg, lexicon)
    sampler = cfg.sampler()
    columns = ("doc_id", "word_index", "word", "exact_shannon", "exact_renyi", "ft_shannon", "ft_renyi",
               "mc_shannon", "mc_renyi", "residual_mass", "approximate", "lower_bound_shannon", "lower_bound_renyi")
    rows = []
    for k, (label, ctx) in enumerate(zip(labels, contexts)):
        enum = enumerate_words(model, lexicon, ctx, cfg.depth)
        ex_sh = exact_shannon(enum)
        ex_re = exact_renyi(enum, cfg.alpha)
        dist = model.next_token_distribution(ctx)
        ft_sh = first_token_shannon(dist)
        ft_re = first_token_renyi(dist, cfg.alpha)
        samples = sample_set(model, lexicon, ctx, sampler, context_index=k)
        mc_sh = mc_shannon(samples).bits
        mc_re = mc_shannon(samples).bits if cfg.alpha == 1 else mc_renyi(samples, cfg.alpha, n_boot=2).bits
        verdict_sh = "PASS" if ft_sh <= ex_sh.bits + 1e-9 else "FAIL"
        verdict_re = "PASS" if ft_re <= ex_re.bits + 1e-9 else "VIOLATION"
        if ex_sh.approximate:
            verdict_sh = verdict_re = "APPROXIMATE"
        rows.append((*label, ex_sh.bits, ex_re.bits, ft_sh, ft_re, mc_sh, mc_re, ex_sh.residual_mass,
                     ex_sh.approximate, verdict_sh, verdict_re))
    out.write(cfg.header("oracle") + f" depth={cfg.depth}\n")
    out.write("\t".join(columns) + "\n")
    for row in rows:
        out.write("\t".join(_fmt_oracle(c, v) for c, v in zip(columns, row)) + "\n")


def _fmt_oracle(column: str, value) -> str:
    if column == "residual_mass":
        return f"{value:.6e}"
    return fmt(value)


def cmd_variance(cfg: RunConfig, out) -> None:
    lexicon, model = _load_model(cfg)
    _, contexts = _contexts(cfg, lexicon)
    sampler = cfg.sampler()
    reports = {kind: bootstrap_cv(model, lexicon, contexts, kind, cfg.ks, cfg.n_boot, sampler, cfg.alpha)
               for kind in ("shannon", "renyi")}
    sh, re_ = reports["shannon"], reports["renyi"]
    rows = [(k, float(sh.cv[j]), float(re_.cv[j]), int(sh.undefined[j]), int(re_.undefined[j]))
            for j, k in enumerate(sh.ks)]
    write_table(out, cfg.header("variance") + f" n_boot={cfg.n_boot}",
                ("k", "cv_shannon", "cv_renyi", "undefined_shannon", "undefined_renyi"), rows)


def _entropy_tables(cfg: RunConfig, lexicon, model, corpus) -> dict[str, dict]:
    if cfg.estimates is not None:
        raw = read_estimates(cfg.estimates)
        rows = [{**r, "key": (r["doc_id"], r["word_index"])} for r in raw]
    else:
        est = estimate_corpus(model, lexicon, corpus, cfg.sampler(), cfg.alpha, cfg.n_boot, _workers(cfg))
        rows = [{**asdict(r), "key": (r.doc_id, r.word_index)} for r in est]
    return {v: {r["key"]: r[v] for r in rows} for v in VARIANTS}


def cmd_regress(cfg: RunConfig, out) -> None:
    _need(cfg, "corpus", "rt", "unigram")
    if len(cfg.variants) > 2:
        raise ValidationError("regress compares at most two entropy variants")
    lexicon, model = _load_model(cfg)
    corpus = load_corpus(cfg.corpus, lexicon, **({"marker": cfg.marker} if cfg.marker else {}))
    dataset = load_rt(cfg.rt, cfg.heldout_frac, cfg.seed)
    items = item_predictors(model, lexicon, corpus, load_unigram(cfg.unigram))
    tables = _entropy_tables(cfg, lexicon, model, corpus)

    base_design = build_design(dataset, items, cfg.response, log_rt=cfg.log_rt)
    base_fit = fit_linear_model(base_design.X_fit, base_design.y_fit, base_design.columns)
    base_ll = heldout_loglik(base_fit, base_design.X_held, base_design.y_held)
    lines = [("n_fit", len(base_design.y_fit)), ("n_heldout", len(base_design.y_held)),
             ("baseline_heldout_ll", base_ll)]
    errors = []
    for v in cfg.variants:
        design = build_design(dataset, items, cfg.response, entropy=tables[v], entropy_name=v, log_rt=cfg.log_rt)
        fit = fit_linear_model(design.X_fit, design.y_fit, design.columns)
        lines += [(f"extended_heldout_ll[{v}]", heldout_loglik(fit, design.X_held, design.y_held)),
                  (f"delta_ll[{v}]", delta_ll(base_fit, fit, base_design, design))]
        errors.append(squared_errors(fit, design.X_held, design.y_held))
    if len(errors) == 2:
        groups = [key[1:] for key in base_design.keys_held] if cfg.perm_by_item else None
        perm = paired_permutation_test(errors[0], errors[1], cfg.n_perm, cfg.seed, groups=groups)
        lines += [("permutation_statistic", perm.statistic), ("permutation_p", perm.p_value),
                  ("permutation_n", perm.n_perm)]
    write_table(out, cfg.header("regress") + f" response={cfg.response} heldout_frac={cfg.heldout_frac:.6f}",
                ("metric", "value"), lines)


def cmd_aggregate(cfg: RunConfig, out) -> None:
    _need(cfg, "corpus")
    variant = cfg.variants[0]
    if cfg.estimates is None:
        lexicon, model = _load_model(cfg)
    else:
        _need(cfg, "lexicon")
        lexicon, model = load_lexicon(cfg.lexicon, marker=cfg.marker), None
    corpus = load_corpus(cfg.corpus, lexicon, **({"marker": cfg.marker} if cfg.marker else {}))
    if not corpus.tagged:
        raise SchemaError(f"{cfg.corpus}: aggregate needs a pos column")
    table = _entropy_tables(cfg, lexicon, model, corpus)[variant]
    try:
        values = [table[w.key] for w in corpus.words]
    except KeyError as exc:
        raise SchemaError(f"no {variant} estimate for corpus word {exc.args[0]}") from None
    stats = aggregate_by_tag(values, [w.pos for w in corpus.words], cfg.top_k)
    write_table(out, cfg.header("aggregate") + f" variant={variant} top_k={cfg.top_k}",
                ("tag", "count", "mean_entropy", "sem"), ((s.tag, s.count, s.mean, s.sem) for s in stats))


HELP = {
    "estimate": "per-word entropy estimates for every corpus position",
    "oracle": "exact enumeration next to the estimators, with lower-bound checks",
    "variance": "bootstrap coefficient of variation by sample count",
    "regress": "held-out log-likelihood gain of entropy predictors on reading times",
    "aggregate": "mean entropy by part-of-speech tag",
}

COMMANDS = {
    "estimate": cmd_estimate,
    "oracle": cmd_oracle,
    "variance": cmd_variance,
    "regress": cmd_regress,
    "aggregate": cmd_aggregate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    g.add_argument("--lexicon")
    g.add_argument("--lm")
    g.add_argument("--corpus")
    g.add_argument("--rt")
    g.add_argument("--unigram")
    g.add_argument("--estimates", help="table from `estimate` to reuse instead of resampling")
    g.add_argument("--marker", help="infer boundary flags from this surface prefix")
    g.add_argument("-o", "--out", help="output file (default: stdout)")
    p = common.add_argument_group("parameters")
    p.add_argument("--samples", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--max-word-tokens", type=int, dest="max_word_tokens")
    p.add_argument("--seed", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--ks", type=lambda s: [int(x) for x in s.split(",")], help="comma-separated sample counts")
    p.add_argument("--n-boot", type=int, dest="n_boot")
    p.add_argument("--n-perm", type=int, dest="n_perm")
    p.add_argument("--heldout-frac", type=float, dest="heldout_frac")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--order", type=int)
    p.add_argument("--response", choices=RESPONSE_KINDS)
    p.add_argument("--log-rt", action="store_const", const=True, dest="log_rt")
    p.add_argument("--variant", action="append", dest="variants", choices=VARIANTS)
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--perm-by-item", action="store_const", const=True, dest="perm_by_item",
                   help="flip signs per (doc, word) item instead of per row")
    p.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wordentropy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    cfg.validate()
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                COMMANDS[args.command](cfg, fh)
        else:
            COMMANDS[args.command](cfg, sys.stdout)
    except (WordEntropyError, OSError) as exc:
        print(f"wordentropy {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"wordentropy {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
