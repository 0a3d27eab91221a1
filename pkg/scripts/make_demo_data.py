"""Write the demo inputs under data/: toy model A and a sampled bigram corpus with reading times."""

import argparse
from pathlib import Path

from wordentropy.lexicon import write_lexicon
from wordentropy.lm import write_ngram_model
from wordentropy.simulate import write_demo_files
from wordentropy.toy import toy_model_a


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    toy = args.out / "toy_a"
    toy.mkdir(parents=True, exist_ok=True)
    m = toy_model_a()
    write_lexicon(m.lexicon, toy / "lexicon.tsv")
    write_ngram_model(m, toy / "lm.tsv")
    (toy / "corpus.tsv").write_text(
        "doc_id\tword_index\tword\tpos\nd1\t0\ta\tDT\nd1\t1\tax\tNN\nd1\t2\tb\tIN\nd1\t3\taxx\tNN\n",
        encoding="utf-8")

    paths = write_demo_files(args.out / "demo", seed=args.seed)
    for p in [*sorted(toy.iterdir()), *paths.values()]:
        print(p)


if __name__ == "__main__":
    main()
