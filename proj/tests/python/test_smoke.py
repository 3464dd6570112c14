"""Smoke tests for the Python bindings: every major operation is reachable
from Python and agrees with pinned values from the C++ suites."""

import json
import math

import pytest

import zombiekit as zk


def small_config():
    cfg = zk.SynthConfig()
    cfg.seed = 7
    cfg.n_general_accounts = 40
    cfg.n_zombie_accounts = 40
    cfg.n_general_pairs = 120
    cfg.n_zombie_pairs = 120
    cfg.n_clean_pairs = 200
    return cfg


def test_tokenize_pins():
    assert zk.tokenize("Hello WORLD 42") == ["hello", "world", "42"]
    # Japanese runs become overlapping character bigrams.
    assert zk.tokenize("こんにちは") == ["こん", "んに", "にち", "ちは"]
    cfg = zk.TokenizerConfig()
    cfg.lowercase = False
    assert zk.tokenize("Hello", cfg) == ["Hello"]


def test_welch_pin():
    r = zk.welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert abs(r.t_statistic - (-1.0)) < 1e-12
    assert abs(r.degrees_of_freedom - 8.0) < 1e-12
    assert abs(r.p_value - 0.34659350708733425) < 1e-9


def test_fleiss_pin():
    r = zk.fleiss_kappa([[2, 2], [2, 2]], 4)
    assert r.defined
    assert abs(r.kappa - (-1.0 / 3.0)) < 1e-12


def test_cosine_and_features():
    value, degenerate = zk.cosine([1.0, 0.0], [0.0, 1.0])
    assert value == 0.0 and not degenerate
    value, degenerate = zk.cosine([0.0, 0.0], [1.0, 0.0])
    assert degenerate
    f = zk.build_features([1.0, 0.0], [0.0, 1.0])
    assert f == [1.0, 0.0, 0.0, 1.0, 1.0, -1.0, 0.0, 0.0]


def test_seed_derivation_stable():
    a = zk.derive_seed(42, "synth")
    b = zk.derive_seed(42, "synth")
    c = zk.derive_seed(42, "split")
    assert a == b
    assert a != c


def test_synth_determinism_and_split():
    corpus_a = zk.synth_generate(small_config())
    corpus_b = zk.synth_generate(small_config())
    assert len(corpus_a.pairs) == 240
    assert len(corpus_a.accounts) == 80
    assert len(corpus_a.clean_pairs) == 200
    assert [p.pair_id for p in corpus_a.pairs] == [p.pair_id for p in corpus_b.pairs]
    assert [p.reply_text for p in corpus_a.pairs] == [
        p.reply_text for p in corpus_b.pairs
    ]

    split = zk.split_pairs(corpus_a.pairs, 0.8, 5)
    assert len(split.train_ids) == zk.round_half_even(0.8 * 240)
    assert len(split.train_ids) + len(split.test_ids) == 240
    assert not set(split.train_ids) & set(split.test_ids)


def test_encoder_roundtrip(tmp_path):
    enc = zk.make_encoder(4096, 16, 1, 2)
    u = zk.encode(enc, "hello world")
    assert abs(math.sqrt(sum(x * x for x in u)) - 1.0) < 1e-12
    path = str(tmp_path / "enc.ckpt")
    zk.save_encoder(enc, path)
    loaded = zk.load_encoder(path)
    assert zk.encode(loaded, "hello world") == u


def test_pairs_roundtrip(tmp_path):
    corpus = zk.synth_generate(small_config())
    path = str(tmp_path / "pairs.jsonl")
    zk.save_pairs(corpus.pairs, path)
    loaded = zk.load_pairs(path)
    assert [p.pair_id for p in loaded] == [p.pair_id for p in corpus.pairs]
    assert loaded[0].label in (zk.Label.General, zk.Label.Zombie)


def test_end_to_end_training():
    corpus = zk.synth_generate(small_config())
    split = zk.split_pairs(corpus.pairs, 0.8, 11)
    by_id = {p.pair_id: p for p in corpus.pairs}
    train = [by_id[i] for i in split.train_ids]
    test = [by_id[i] for i in split.test_ids]

    enc = zk.make_encoder(4096, 16, 3, 4)
    mnr = zk.MnrConfig()
    mnr.epochs = 2
    mnr.learning_rate = 1.0
    tuned, log = zk.train_encoder(corpus.clean_pairs, enc, mnr)
    assert len(log.epoch_mean_loss) == 2
    assert zk.similarity_margin(tuned, corpus.pairs) > zk.similarity_margin(
        enc, corpus.pairs
    )

    hyper = zk.MlpHyper()
    hyper.epochs = 10
    hyper.learning_rate = 0.5
    hyper.hidden = 16
    model = zk.mlp_train(train, tuned, hyper)
    assert model.input_dim == 4 * 16

    preds = [zk.predict(model, tuned, t.parent_text, t.reply_text)[0] for t in test]
    gold = [t.label for t in test]
    report = zk.evaluate(preds, gold)
    assert report.n_test == len(test)
    assert 0.0 <= report.accuracy <= 1.0
    parsed = json.loads(zk.eval_report_json(report))
    assert parsed["n_test"] == len(test)

    # Determinism: the same hyperparameters give the same weights.
    again = zk.mlp_train(train, tuned, hyper)
    assert again.w1 == model.w1 and again.b2 == model.b2

    baseline = zk.train_tfidf_logreg(train)
    label, p_zombie = zk.predict_tfidf(
        baseline, test[0].parent_text, test[0].reply_text
    )
    assert label in (zk.Label.General, zk.Label.Zombie)
    assert 0.0 <= p_zombie <= 1.0

    slices = zk.analyze_errors(preds, gold, test)
    total_errors = len(slices.false_positives.pair_ids) + len(
        slices.false_negatives.pair_ids
    )
    assert total_errors == report.general_as_zombie + report.zombie_as_general


def test_python_transport_subclass():
    corpus = zk.synth_generate(small_config())
    gold = {p.pair_id: p.label for p in corpus.pairs}
    calls = []

    class PyOracle(zk.Transport):
        def send(self, request):
            calls.append(request.pair_id)
            assert "Answer" in request.user_text
            return (
                "ZOMBIE" if gold[request.pair_id] == zk.Label.Zombie else "GENERAL"
            )

    split = zk.split_pairs(corpus.pairs, 0.8, 21)
    by_id = {p.pair_id: p for p in corpus.pairs}
    train = [by_id[i] for i in split.train_ids]
    test = [by_id[i] for i in split.test_ids][:12]

    opts = zk.JudgeOptions()
    opts.mode = zk.JudgeMode.FewShot
    result = zk.judge_pairs(test, train, PyOracle(), zk.TransportConfig(), opts)
    assert result.report.accuracy == 1.0
    assert result.n_unparseable == 0
    assert len(result.audit) == 12
    assert calls == [t.pair_id for t in test]
    assert len(result.audit[0].prompt_sha256) == 64

    # Bounded concurrency drives the same Python transport from worker threads.
    opts.max_in_flight = 4
    again = zk.judge_pairs(test, train, PyOracle(), zk.TransportConfig(), opts)
    assert [v.kind for v in again.verdicts] == [v.kind for v in result.verdicts]


def test_judge_unparseable_counts():
    corpus = zk.synth_generate(small_config())
    test = corpus.pairs[:4]
    result = zk.judge_pairs(
        test, [], zk.FixedTextTransport("maybe; hard to say"), zk.TransportConfig()
    )
    assert result.n_unparseable == 4
    assert result.report.accuracy == 0.0
    assert all(v.kind == zk.VerdictKind.Unparseable for v in result.verdicts)


def test_summary_report_json():
    corpus = zk.synth_generate(small_config())
    parsed = json.loads(zk.summary_report_json(corpus.accounts, corpus.pairs))
    stats = parsed["accounts"]
    assert (
        stats["zombie"]["mean_posts_per_day"]
        > stats["general"]["mean_posts_per_day"]
    )


def test_validation_errors_are_python_exceptions():
    cfg = zk.SynthConfig()
    cfg.zombie_duplicate_rate = 1.5
    with pytest.raises(ValueError):
        zk.synth_generate(cfg)
    with pytest.raises(RuntimeError):
        zk.load_pairs("/nonexistent/pairs.jsonl")
