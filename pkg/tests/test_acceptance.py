"""Exit criteria, one test each. A PASS/FAIL line per criterion is printed in the session summary."""

import math
import time

import numpy as np
import pytest

import oracles
from wordentropy.analysis import (
    DEFAULT_KS,
    DEFAULT_N_BOOT,
    bootstrap_cv,
    build_design,
    delta_ll,
    fit_linear_model,
    paired_permutation_test,
    squared_errors,
)
from wordentropy.cli import RunConfig, main
from wordentropy.estimators import (
    enumerate_words,
    exact_renyi,
    exact_shannon,
    first_token_renyi,
    first_token_shannon,
    mc_renyi,
    mc_shannon,
)
from wordentropy.lexicon import write_lexicon
from wordentropy.lm import write_ngram_model
from wordentropy.sampler import SamplerConfig, sample_set, score_word
from wordentropy.simulate import simulate_study
from wordentropy.toy import random_model, toy_model_a

RESULTS: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of the calling test under its criterion label."""
    label = request.node.get_closest_marker("criterion").args[0]
    start = time.perf_counter()
    detail = {}
    yield detail
    elapsed = time.perf_counter() - start
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    info = ", ".join(f"{k}={v}" for k, v in detail.items())
    RESULTS[label] = f"{'FAIL' if failed else 'PASS'}  {label}  ({elapsed:.1f}s{'; ' + info if info else ''})"


@pytest.mark.criterion("1 lower bound")
def test_lower_bound(criterion):
    start = time.perf_counter()
    m = toy_model_a()
    ft = first_token_shannon(m.next_token_distribution([]))
    exact = exact_shannon(enumerate_words(m, m.lexicon, [], 20))
    elapsed = time.perf_counter() - start
    criterion.update(ft=f"{ft:.6f}", exact=f"{exact.bits:.6f}")
    assert ft == pytest.approx(1.5, abs=1e-12)
    assert abs(exact.bits - 2.0) <= 1e-4 and not exact.approximate
    assert ft < exact.bits
    assert elapsed < 1.0


@pytest.mark.criterion("2 MC unbiasedness")
def test_mc_unbiased(criterion):
    start = time.perf_counter()
    m = toy_model_a()
    R = 100
    ests = [mc_shannon(sample_set(m, m.lexicon, [], SamplerConfig(512, 20, seed))) for seed in range(R)]
    elapsed = time.perf_counter() - start
    grand = float(np.mean([e.bits for e in ests]))
    pooled = math.sqrt(np.mean([e.stderr_bits**2 for e in ests]))
    criterion.update(grand_mean=f"{grand:.4f}", bound=f"{4 * pooled / math.sqrt(R):.4f}")
    assert abs(grand - 2.0) <= 0.02
    assert abs(grand - exact_shannon(enumerate_words(m, m.lexicon, [], 20)).bits) <= 4 * pooled / math.sqrt(R)
    assert elapsed < 30.0


@pytest.mark.criterion("3 Renyi exactness")
def test_renyi_exact(criterion):
    m = toy_model_a()
    enum = enumerate_words(m, m.lexicon, [], 20)
    dist = m.next_token_distribution([])
    er = exact_renyi(enum, 0.5).bits
    fr = first_token_renyi(dist, 0.5)
    criterion.update(exact=f"{er:.6f}", first_token=f"{fr:.6f}")
    assert abs(er - 2 * math.log2(1 + math.sqrt(2))) <= 1e-4
    assert abs(fr - 1.543107) <= 1e-6
    assert abs(first_token_renyi(dist, 1) - first_token_shannon(dist)) <= 1e-9
    assert abs(exact_renyi(enum, 1).bits - exact_shannon(enum).bits) <= 1e-9
    ss = sample_set(m, m.lexicon, [], SamplerConfig(512, 20, 0))
    assert abs(mc_renyi(ss, 1).bits - mc_shannon(ss).bits) <= 1e-9


@pytest.mark.criterion("4 variance scaling")
def test_variance_scaling(criterion):
    start = time.perf_counter()
    m = toy_model_a()
    ks = (64, 256, 1024)
    contexts = [()] * 16
    cfg = SamplerConfig(seed=0)
    sh = bootstrap_cv(m, m.lexicon, contexts, "shannon", ks, DEFAULT_N_BOOT, cfg)
    re_ = bootstrap_cv(m, m.lexicon, contexts, "renyi", ks, DEFAULT_N_BOOT, cfg, alpha=0.5)
    elapsed = time.perf_counter() - start
    ratio = sh.cv[1] / sh.cv[2]
    criterion.update(cv_shannon=np.round(sh.cv, 4).tolist(), cv_renyi=np.round(re_.cv, 4).tolist(),
                     ratio=f"{ratio:.3f}")
    assert sh.cv[0] > sh.cv[1] > sh.cv[2]
    assert 1.4 <= ratio <= 2.6
    assert np.all(re_.cv >= sh.cv)
    assert elapsed < 120.0


@pytest.mark.criterion("5 distribution properness")
def test_properness(criterion):
    m = toy_model_a()
    for d in (1, 2, 3):
        assert abs(enumerate_words(m, m.lexicon, [], d).residual_mass - 0.25**d) <= 1e-12
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        rm = random_model(rng)
        depth = int(rng.integers(1, 5))
        ctx = [] if rng.random() < 0.5 else [int(rng.integers(0, len(rm.lexicon)))]
        enum = enumerate_words(rm, rm.lexicon, ctx, depth)
        worst = max(worst, abs(enum.probs.sum() + enum.residual_mass - 1.0))
    criterion.update(worst_deviation=f"{worst:.2e}")
    assert worst <= 1e-9


@pytest.mark.criterion("6 sampler/scorer agreement")
def test_sampler_scorer(criterion):
    m = toy_model_a()
    n = 10**5
    ss = sample_set(m, m.lexicon, [], SamplerConfig(n, 20, 1))
    p = 2 ** -score_word(m, m.lexicon, [], [0])
    freq = sum(s.token_ids == (0,) for s in ss.samples) / n
    sigma = math.sqrt(p * (1 - p) / n)
    criterion.update(freq=f"{freq:.5f}", p=f"{p:.6f}", z=f"{(freq - p) / sigma:.2f}")
    assert p == pytest.approx(0.5, abs=1e-12)
    assert abs(freq - p) <= 3 * sigma
    assert ss.truncated_count == 0


def _heldout_errors(study, name):
    d = build_design(study.dataset, study.items, "SPR", entropy=study.entropy[name], entropy_name=name)
    fit = fit_linear_model(d.X_fit, d.y_fit, d.columns)
    return squared_errors(fit, d.X_held, d.y_held)


@pytest.mark.criterion("7 regression calibration")
def test_regression_calibration(criterion):
    start = time.perf_counter()
    n_sim = 400
    rejections = 0
    for sim in range(n_sim):
        # one reading per item, two entropy columns that are both unrelated to RT
        study = simulate_study(np.random.default_rng([70, sim]), n_subjects=1, n_docs=10, n_words=30)
        res = paired_permutation_test(_heldout_errors(study, "ent0"), _heldout_errors(study, "ent1"), seed=sim)
        rejections += res.p_value < 0.05
    positive = 0
    for sim in range(n_sim):
        study = simulate_study(np.random.default_rng([71, sim]), entropy_coef=15.0)
        base = build_design(study.dataset, study.items, "SPR")
        ext = build_design(study.dataset, study.items, "SPR", entropy=study.entropy["ent0"])
        positive += delta_ll(fit_linear_model(base.X_fit, base.y_fit), fit_linear_model(ext.X_fit, ext.y_fit),
                             base, ext) > 0
    elapsed = time.perf_counter() - start
    criterion.update(null_rejection=f"{rejections / n_sim:.4f}", planted_positive=f"{positive / n_sim:.4f}")
    assert 0.02 <= rejections / n_sim <= 0.08
    assert positive / n_sim >= 0.95
    assert elapsed < 300.0


@pytest.mark.criterion("8 default-constant fidelity")
def test_config_echo(criterion, tmp_path):
    cfg = RunConfig()
    assert cfg.samples == 512 and SamplerConfig().sample_count == 512
    assert cfg.max_word_tokens == 20 and SamplerConfig().max_word_tokens == 20
    assert cfg.alpha == 0.5
    assert tuple(cfg.ks) == DEFAULT_KS == tuple(2**j for j in range(2, 12))
    assert cfg.n_boot == DEFAULT_N_BOOT == 1000
    m = toy_model_a()
    write_lexicon(m.lexicon, tmp_path / "lexicon.tsv")
    write_ngram_model(m, tmp_path / "lm.tsv")
    (tmp_path / "corpus.tsv").write_text("doc_id\tword_index\tword\nd\t0\ta\n", encoding="utf-8")
    out = tmp_path / "out.tsv"
    assert main(["estimate", "--lexicon", str(tmp_path / "lexicon.tsv"), "--lm", str(tmp_path / "lm.tsv"),
                 "--corpus", str(tmp_path / "corpus.tsv"), "-o", str(out)]) == 0
    header = out.read_text(encoding="utf-8").splitlines()[0]
    criterion.update(header=repr(header))
    for token in ("samples=512", "alpha=0.5", "max_word_tokens=20", "seed=0"):
        assert token in header.split()
