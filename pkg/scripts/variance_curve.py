"""CV_k by sample count for Shannon and Rényi MC estimates over a corpus (plot-ready TSV).

Example:
    python scripts/variance_curve.py --data data/demo --positions 40 > cv.tsv
"""

import argparse
import sys
from pathlib import Path

from wordentropy.analysis import DEFAULT_KS, bootstrap_cv
from wordentropy.corpus import load_corpus
from wordentropy.lexicon import load_lexicon
from wordentropy.lm import load_ngram_model
from wordentropy.sampler import SamplerConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", type=Path, default=Path("data/demo"))
    ap.add_argument("--positions", type=int, default=None, help="use only the first N corpus words")
    ap.add_argument("--n-boot", type=int, default=1000)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    lex = load_lexicon(args.data / "lexicon.tsv")
    model = load_ngram_model(args.data / "lm.tsv", lex)
    corpus = load_corpus(args.data / "corpus.tsv", lex)
    contexts = corpus.contexts()[: args.positions]
    cfg = SamplerConfig(seed=args.seed)
    reports = [bootstrap_cv(model, lex, contexts, kind, DEFAULT_KS, args.n_boot, cfg, args.alpha)
               for kind in ("shannon", "renyi")]
    out = sys.stdout
    out.write(f"# positions={len(contexts)} n_boot={args.n_boot} alpha={args.alpha} seed={args.seed}\n")
    out.write("k\tcv_shannon\tcv_renyi\n")
    for j, k in enumerate(DEFAULT_KS):
        out.write(f"{k}\t{reports[0].cv[j]:.6f}\t{reports[1].cv[j]:.6f}\n")


if __name__ == "__main__":
    main()
