"""Null rejection rate of the paired sign-flip test on held-out squared errors.

Two regressions, each adding an entropy column unrelated to RT, are compared
on simulated studies. Reports the rate for row-level flips and for flips
grouped by item, with one or several readings per item.
"""

import argparse

import numpy as np

from wordentropy.analysis import build_design, fit_linear_model, paired_permutation_test, squared_errors
from wordentropy.simulate import simulate_study


def errors(study, name):
    d = build_design(study.dataset, study.items, "SPR", entropy=study.entropy[name], entropy_name=name)
    fit = fit_linear_model(d.X_fit, d.y_fit, d.columns)
    return squared_errors(fit, d.X_held, d.y_held), [k[1:] for k in d.keys_held]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sims", type=int, default=400)
    ap.add_argument("--n-perm", type=int, default=999)
    ap.add_argument("--level", type=float, default=0.05)
    args = ap.parse_args()

    designs = {
        "1 reading/item": dict(n_subjects=1, n_docs=10, n_words=30),
        "8 readings/item": dict(n_subjects=8, n_docs=6, n_words=25),
    }
    print("design\tflips\trejection_rate\tsims")
    for label, kw in designs.items():
        hits = {"row": 0, "item": 0}
        for sim in range(args.sims):
            study = simulate_study(np.random.default_rng([90, sim]), **kw)
            (ea, groups), (eb, _) = errors(study, "ent0"), errors(study, "ent1")
            hits["row"] += paired_permutation_test(ea, eb, args.n_perm, sim).p_value < args.level
            hits["item"] += paired_permutation_test(ea, eb, args.n_perm, sim, groups=groups).p_value < args.level
        for flips, h in hits.items():
            print(f"{label}\t{flips}\t{h / args.sims:.4f}\t{args.sims}")


if __name__ == "__main__":
    main()
