import math

import pytest

from wordentropy.cli import RunConfig, main
from wordentropy.lexicon import TokenEntry, build_lexicon, write_lexicon
from wordentropy.lm import NGramModel, write_ngram_model
from wordentropy.simulate import write_demo_files
from wordentropy.toy import toy_model_a


def read_table(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[1].split("\t")
    return lines[0], [dict(zip(header, ln.split("\t"))) for ln in lines[2:]]


@pytest.fixture
def toy_files(tmp_path):
    m = toy_model_a()
    write_lexicon(m.lexicon, tmp_path / "lexicon.tsv")
    write_ngram_model(m, tmp_path / "lm.tsv")
    (tmp_path / "corpus.tsv").write_text("doc_id\tword_index\tword\tpos\nd1\t0\ta\tNN\n", encoding="utf-8")
    return tmp_path


@pytest.fixture(scope="module")
def demo_files(tmp_path_factory):
    return write_demo_files(tmp_path_factory.mktemp("demo"), seed=3, n_docs=3, n_words=25, n_subjects=4,
                            truth_samples=300)


def run(tmp_path, *argv, name="out.tsv"):
    out = tmp_path / name
    code = main([*argv, "-o", str(out)])
    return code, out


def toy_args(d):
    return ["--lexicon", str(d / "lexicon.tsv"), "--lm", str(d / "lm.tsv")]


def test_estimate_one_word(toy_files):
    code, out = run(toy_files, "estimate", *toy_args(toy_files), "--corpus", str(toy_files / "corpus.tsv"))
    assert code == 0
    header, rows = read_table(out)
    assert header == "# wordentropy estimate samples=512 alpha=0.5 max_word_tokens=20 seed=0 lambda=1.0"
    row = rows[0]
    assert row["ft_shannon"] == "1.500000"
    assert row["ft_renyi"] == "1.543107"
    assert row["surprisal"] == "1.000000"
    assert abs(float(row["mc_shannon"]) - 2.0) < 4 * float(row["mc_shannon_stderr"])
    assert row["truncated_count"] == "0"


def test_estimate_single_sample_has_no_stderr(toy_files):
    code, out = run(toy_files, "estimate", *toy_args(toy_files), "--corpus", str(toy_files / "corpus.tsv"),
                    "--samples", "1")
    assert code == 0
    row = read_table(out)[1][0]
    assert row["mc_shannon_stderr"] == "" and row["mc_renyi_stderr"] == ""


def test_estimate_is_byte_identical(demo_files, tmp_path):
    d = demo_files["lexicon"].parent
    args = ["estimate", *toy_args(d), "--corpus", str(d / "corpus.tsv"), "--samples", "64", "--n-boot", "50"]
    _, a = run(tmp_path, *args, "--threads", "1", name="a.tsv")
    _, b = run(tmp_path, *args, "--threads", "4", name="b.tsv")
    assert a.read_bytes() == b.read_bytes()


def test_missing_lm_file(toy_files, capsys):
    code = main(["estimate", "--lexicon", str(toy_files / "lexicon.tsv"), "--lm", str(toy_files / "nope.tsv"),
                 "--corpus", str(toy_files / "corpus.tsv")])
    assert code == 2
    assert "nope.tsv" in capsys.readouterr().err


def test_config_file_and_override(toy_files):
    cfg = toy_files / "run.json"
    cfg.write_text('{"samples": 32, "seed": 5, "alpha": 2.0}', encoding="utf-8")
    code, out = run(toy_files, "estimate", "--config", str(cfg), *toy_args(toy_files),
                    "--corpus", str(toy_files / "corpus.tsv"), "--seed", "6")
    assert code == 0
    assert read_table(out)[0] == "# wordentropy estimate samples=32 alpha=2.0 max_word_tokens=20 seed=6 lambda=1.0"
    cfg.write_text('{"sample": 32}', encoding="utf-8")
    assert main(["estimate", "--config", str(cfg)]) == 2


def test_oracle_toy_a(toy_files):
    code, out = run(toy_files, "oracle", *toy_args(toy_files), "--depth", "20")
    assert code == 0
    row = read_table(out)[1][0]
    assert row["exact_shannon"] == "2.000000"
    assert float(row["residual_mass"]) < 1e-11
    assert row["lower_bound_shannon"] == "PASS"
    assert row["approximate"] == "0"


def test_oracle_shallow_depth_flags(toy_files):
    code, out = run(toy_files, "oracle", *toy_args(toy_files), "--depth", "1")
    row = read_table(out)[1][0]
    assert code == 0 and row["approximate"] == "1" and float(row["residual_mass"]) == pytest.approx(0.25)


def test_oracle_tractability_guard(tmp_path):
    lex = build_lexicon([TokenEntry(i, f"▁t{i}" if i < 500 else f"t{i}", i < 500) for i in range(1000)])
    write_lexicon(lex, tmp_path / "lexicon.tsv")
    write_ngram_model(NGramModel(lex, 1, {(): [1e-3] * 1000}), tmp_path / "lm.tsv")
    code, _ = run(tmp_path, "oracle", *toy_args(tmp_path), "--depth", "6")
    assert code == 2


def test_variance_default_grid(toy_files):
    code, out = run(toy_files, "variance", *toy_args(toy_files), "--n-boot", "20")
    assert code == 0
    rows = read_table(out)[1]
    assert [int(r["k"]) for r in rows] == [2**j for j in range(2, 12)]


def test_variance_deterministic_model(tmp_path):
    lex = build_lexicon([TokenEntry(0, "▁a", True)])
    write_lexicon(lex, tmp_path / "lexicon.tsv")
    write_ngram_model(NGramModel(lex, 1, {(): [1.0]}), tmp_path / "lm.tsv")
    code, out = run(tmp_path, "variance", *toy_args(tmp_path), "--ks", "4,8,16", "--n-boot", "10")
    assert code == 0
    assert all(float(r["cv_shannon"]) == 0.0 and float(r["cv_renyi"]) == 0.0 for r in read_table(out)[1])


def test_variance_renyi_above_shannon(toy_files):
    code, out = run(toy_files, "variance", *toy_args(toy_files), "--ks", "64,256", "--n-boot", "300")
    assert code == 0
    for r in read_table(out)[1]:
        assert float(r["cv_renyi"]) >= float(r["cv_shannon"])


def regress_args(d):
    return [*toy_args(d), "--corpus", str(d / "corpus.tsv"), "--rt", str(d / "rt.tsv"),
            "--unigram", str(d / "unigram.tsv"), "--samples", "128", "--n-boot", "50", "--n-perm", "500"]


def metrics(out):
    return {r["metric"]: r["value"] for r in read_table(out)[1]}


def test_regress_planted_effect(demo_files, tmp_path):
    d = demo_files["lexicon"].parent
    code, out = run(tmp_path, "regress", *regress_args(d), "--variant", "mc_shannon")
    assert code == 0
    assert float(metrics(out)["delta_ll[mc_shannon]"]) > 0


def test_regress_same_variant_twice(demo_files, tmp_path):
    d = demo_files["lexicon"].parent
    code, out = run(tmp_path, "regress", *regress_args(d), "--variant", "ft_renyi", "--variant", "ft_renyi")
    assert code == 0
    m = metrics(out)
    assert float(m["permutation_p"]) == 1.0 and float(m["permutation_statistic"]) == 0.0


def test_regress_eye_tracking_and_reused_estimates(demo_files, tmp_path):
    d = demo_files["lexicon"].parent
    _, est = run(tmp_path, "estimate", *toy_args(d), "--corpus", str(d / "corpus.tsv"), "--samples", "64",
                 "--n-boot", "20", name="est.tsv")
    code, out = run(tmp_path, "regress", *regress_args(d), "--estimates", str(est), "--response", "GP",
                    "--variant", "mc_renyi", "--log-rt")
    assert code == 0
    assert math.isfinite(float(metrics(out)["delta_ll[mc_renyi]"]))


def test_regress_heldout_zero_is_config_error(demo_files, tmp_path, capsys):
    d = demo_files["lexicon"].parent
    code, _ = run(tmp_path, "regress", *regress_args(d), "--heldout-frac", "0")
    assert code == 2
    assert "heldout_frac" in capsys.readouterr().err


def test_aggregate_tagged(toy_files):
    (toy_files / "corpus.tsv").write_text(
        "doc_id\tword_index\tword\tpos\nd1\t0\ta\tNN\nd1\t1\tax\tNN\nd1\t2\tb\tIN\n", encoding="utf-8")
    code, out = run(toy_files, "aggregate", *toy_args(toy_files), "--corpus", str(toy_files / "corpus.tsv"),
                    "--variant", "ft_shannon")
    assert code == 0
    header, rows = read_table(out)
    assert "top_k=10" in header
    assert [(r["tag"], r["count"], r["mean_entropy"], r["sem"]) for r in rows] == [
        ("NN", "2", "1.500000", "0.000000"), ("IN", "1", "1.500000", "")]


def test_aggregate_untagged(toy_files, tmp_path):
    (toy_files / "plain.tsv").write_text("doc_id\tword_index\tword\nd1\t0\ta\n", encoding="utf-8")
    code, _ = run(tmp_path, "aggregate", *toy_args(toy_files), "--corpus", str(toy_files / "plain.tsv"))
    assert code == 2


def test_bad_flag_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--samples", "many"])
    assert info.value.code == 2


def test_config_defaults():
    cfg = RunConfig()
    assert (cfg.samples, cfg.max_word_tokens, cfg.alpha, cfg.n_boot) == (512, 20, 0.5, 1000)
    assert cfg.ks == [4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048]
    assert cfg.n_perm == 10000 and cfg.heldout_frac == pytest.approx(1 / 3) and cfg.lam == 1.0


def test_regress_item_grouped_permutation(demo_files, tmp_path):
    d = demo_files["lexicon"].parent
    code, out = run(tmp_path, "regress", *regress_args(d), "--variant", "ft_shannon", "--variant", "mc_shannon",
                    "--perm-by-item")
    assert code == 0
    assert 0 < float(metrics(out)["permutation_p"]) <= 1
