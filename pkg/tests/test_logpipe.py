import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlogad.errors import ConfigurationError, DataError
from qlogad.logpipe import synth
from qlogad.logpipe.drain import DrainParser, drain_parse
from qlogad.logpipe.reader import (
    parse_line,
    read_parsed_csv,
    read_raw_log,
    read_templates,
    write_parsed_csv,
    write_templates,
)
from qlogad.logpipe.vectorize import PAD, Vocabulary, cumulative_counts, history_pairs, one_hot, vectorize
from qlogad.logpipe.windows import (
    WindowedSample,
    chronological_split,
    filter_normal,
    oversample_anomalies,
    subsample_training,
    windowize,
)

HEADER = "2005.06.03 R02-M1-N0 2005-06-03-15.42.50 R02-M1-N0 RAS KERNEL INFO"


def samples(labels):
    return [WindowedSample((i,), int(lab), i) for i, lab in enumerate(labels)]


def test_parse_line_fields():
    rec = parse_line(f"- 1117838570 {HEADER} generating core.42", 0)
    assert rec.label_field == "-" and not rec.is_alert
    assert rec.timestamp == 1117838570
    assert rec.content == "generating core.42"
    alert = parse_line(f"KERNDTLB 1117838570 {HEADER} data TLB error", 3)
    assert alert.is_alert
    assert parse_line("   \n", 1) is None
    assert parse_line(f"- notatime {HEADER} x", 7).timestamp == 7


def test_read_raw_log_orders_by_timestamp(tmp_path):
    p = tmp_path / "a.log"
    p.write_text(f"- 20 {HEADER} second\n- 10 {HEADER} first\n- 20 {HEADER} third\n")
    assert [r.content for r in read_raw_log(p)] == ["first", "second", "third"]


def test_read_raw_log_falls_back_to_file_order(tmp_path, caplog):
    p = tmp_path / "b.log"
    p.write_text(f"- 20 {HEADER} a\n- xx {HEADER} b\n- 10 {HEADER} c\n")
    with caplog.at_level(logging.WARNING):
        assert [r.content for r in read_raw_log(p)] == ["a", "b", "c"]
    assert "unparsable" in caplog.text
    with pytest.raises(DataError):
        read_raw_log(tmp_path / "missing.log")


def test_drain_examples():
    templates, ids = drain_parse(["send block A", "send block B"], sim_threshold=0.5)
    assert ids == [1, 1]
    assert templates[1].pattern == "send block <*>"
    templates, ids = drain_parse(["open file", "close file"], sim_threshold=0.6)
    assert ids == [1, 2]
    templates, ids = drain_parse(["same line here"] * 3)
    assert ids == [1, 1, 1] and "<*>" not in templates[1].pattern


def test_drain_similarity_threshold_on_one_leaf():
    # same leading tokens, so both lines reach the same leaf; similarity 2/4
    _, ids = drain_parse(["a b c d", "a b x y"], depth=4, sim_threshold=0.6)
    assert ids == [1, 2]
    _, ids = drain_parse(["a b c d", "a b x y"], depth=4, sim_threshold=0.5)
    assert ids == [1, 1]


def test_drain_empty_content_is_template_zero():
    templates, ids = drain_parse(["", "x y", "   "])
    assert ids == [0, 1, 0]
    assert templates[0].template_id == 0


def test_drain_config_errors():
    with pytest.raises(ConfigurationError):
        DrainParser(depth=2)
    with pytest.raises(ConfigurationError):
        DrainParser(sim_threshold=1.5)


def test_drain_max_children_overflow_goes_to_wildcard():
    parser = DrainParser(depth=3, sim_threshold=0.9, max_children=3)
    ids = parser.parse(["alpha x", "beta x", "gamma x", "delta x"])
    assert len(set(ids)) == 4  # distinct templates, but the leaf fan-out is capped
    assert len(parser.root.children[2].children) <= 3


def test_drain_template_soundness_and_determinism(tmp_path):
    corpus = synth.generate_corpus(tmp_path / "s.log", n_windows=20, seed=3)
    lines = read_raw_log(corpus.path)
    templates, ids = drain_parse(lines)
    for line, i in zip(lines, ids):
        assert templates[i].matches(line.content)
    t2, ids2 = drain_parse(read_raw_log(corpus.path))
    assert ids2 == ids and [t.pattern for t in t2] == [t.pattern for t in templates]
    assert len(templates) - 1 == corpus.n_templates


def test_pipeline_fixture(bgl_fixture):
    lines = read_raw_log(bgl_fixture)
    assert len(lines) == 1000
    templates, ids = drain_parse(lines)
    assert len(templates) - 1 == 5
    windows = windowize(ids, [line.is_alert for line in lines], 100)
    assert len(windows) == 10
    assert [w.label for w in windows] == [0, 1, 0, 0, 0, 0, 0, 0, 0, 1]
    train, test = chronological_split(windows, 0.8)
    assert (len(train), len(test)) == (8, 2)
    assert max(w.origin for w in train) < min(w.origin for w in test)


def test_windowize_examples(caplog):
    assert len(windowize(np.zeros(250), np.zeros(250), 100)) == 2
    flags = np.zeros(200)
    flags[150] = 1
    assert [w.label for w in windowize(np.arange(200), flags, 100)] == [0, 1]
    with caplog.at_level(logging.WARNING):
        assert windowize(np.arange(50), np.zeros(50), 100) == []
    assert "no full window" in caplog.text
    with pytest.raises(ConfigurationError):
        windowize([1, 2], [0, 0], 1)


def test_full_scale_window_count():
    # a BGL-sized stream: floor division, no materialised windows needed
    assert 4_747_963 // 100 == 47_479


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 1000), size=st.integers(2, 120))
def test_windowing_conservation(n, size):
    ids = np.arange(n)
    windows = windowize(ids, np.zeros(n), size)
    assert sum(len(w.events) for w in windows) == (n // size) * size
    used = [e for w in windows for e in w.events]
    assert used == list(range(len(used)))


def test_split_examples():
    s = samples([0] * 10)
    train, test = chronological_split(s, 0.8)
    assert [x.origin for x in train] == list(range(8)) and [x.origin for x in test] == [8, 9]
    assert tuple(map(len, chronological_split(s, 0.999))) == (9, 1)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigurationError):
            chronological_split(s, bad)


def test_subsample_training():
    s = samples([0] * 1000)
    assert subsample_training(s, 1.0) == s
    sub = subsample_training(s, 0.01, seed=4)
    assert len(sub) == 10
    assert [x.origin for x in sub] == sorted(x.origin for x in sub)
    assert sub == subsample_training(s, 0.01, seed=4)
    assert sub != subsample_training(s, 0.01, seed=5)
    assert len(subsample_training(samples([0] * 7), 0.5)) == 4
    with pytest.raises(ConfigurationError):
        subsample_training(s, 0.0)


def test_filter_normal():
    mixed = samples([0] * 90 + [1] * 10)
    assert len(filter_normal(mixed)) == 90
    clean = samples([0] * 5)
    assert filter_normal(clean) == clean
    with pytest.raises(DataError):
        filter_normal(samples([1, 1]))


def test_oversample_anomalies():
    balanced = samples([0, 0, 0, 1])
    assert oversample_anomalies(balanced, 1 / 3) == balanced
    s = samples([0] * 99 + [1])
    out = oversample_anomalies(s, 1 / 3, seed=0)
    assert sum(x.label for x in out) == 33
    assert sum(1 - x.label for x in out) == 99
    assert [x.origin for x in out] == sorted(x.origin for x in out)
    with pytest.raises(DataError):
        oversample_anomalies(samples([0, 0]), 1 / 3)


def test_oversample_cycles_evenly():
    s = samples([1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1])
    out = oversample_anomalies(s, 1.0, seed=1)
    copies = [sum(x.origin == o for x in out) for o in (0, 13)]
    assert sum(copies) == 12 and abs(copies[0] - copies[1]) <= 1


def test_vocabulary_and_oov():
    vocab = Vocabulary([7, 3, 5, 3])
    assert vocab.template_ids == (3, 5, 7)
    assert len(vocab) == 3 and vocab.oov == 3 and vocab.n_classes == 4
    assert list(vocab.map([5, 3, 99, 7, PAD, 4])) == [1, 0, 3, 2, PAD, 3]
    train = samples([0, 0])
    assert Vocabulary.from_samples(train).template_ids == (0, 1)


def test_vectorize_examples():
    vocab = Vocabulary(range(4))
    v = vectorize([2], "one_hot", vocab)
    assert np.array_equal(v[0].values, [0, 0, 1, 0, 0])
    counts = vectorize([1, 1, 3], "count", vocab, h=3)
    assert np.array_equal(counts[-1].values, [0, 2, 0, 1, 0])
    unseen = vectorize([42], "one_hot", vocab)
    assert unseen[0].values[vocab.oov] == 1
    emb = vectorize([3, 42], "embedding", vocab)
    assert [int(e.values[0]) for e in emb] == [3, 4]


def test_vectorize_count_window_slides():
    vocab = Vocabulary(range(3))
    out = vectorize([0, 1, 2, 2, 2], "count", vocab, h=2)
    assert np.array_equal(out[2].values, [0, 1, 1, 0])
    assert np.array_equal(out[4].values, [0, 0, 2, 0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30))
def test_event_vector_invariants(events):
    vocab = Vocabulary(range(4))
    for v in vectorize(events, "one_hot", vocab):
        assert v.values.sum() == 1
    for v in vectorize(events, "count", vocab, h=5):
        assert np.all(v.values >= 0) and np.all(v.values == np.round(v.values))
        assert v.values.sum() <= 5


def test_history_pairs_padding():
    hist, nxt = history_pairs([4, 5, 6], 2, pad=True)
    assert hist.tolist() == [[PAD, PAD], [PAD, 4], [4, 5]]
    assert nxt.tolist() == [4, 5, 6]
    hist, nxt = history_pairs([4, 5, 6], 2, pad=False)
    assert hist.tolist() == [[4, 5]] and nxt.tolist() == [6]
    hist, nxt = history_pairs([4], 2, pad=False)
    assert hist.shape == (0, 2)


def test_one_hot_and_counts_with_pad():
    oh = one_hot([[PAD, 1], [0, 1]], 3)
    assert np.array_equal(oh[0], [[0, 0, 0], [0, 1, 0]])
    cc = cumulative_counts(np.array([[PAD, 1, 1]]), 3)
    assert np.array_equal(cc[0, -1], [0, 2, 0])


def test_parsed_csv_and_templates_roundtrip(tmp_path):
    write_parsed_csv(tmp_path / "p.csv", [0, 1, 0], [3, 4, 3])
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "origin_index,label,event_id"
    assert read_parsed_csv(tmp_path / "p.csv") == ([0, 1, 0], [3, 4, 3])
    templates, _ = drain_parse(["send block 1", "send block 2"])
    write_templates(tmp_path / "t.tsv", templates)
    assert read_templates(tmp_path / "t.tsv")[1] == "send block <*>"


def test_parsed_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(DataError):
        read_parsed_csv(p)
    p.write_text("origin_index,label,event_id\nx,0,1\n")
    with pytest.raises(DataError):
        read_parsed_csv(p)


def test_synthetic_corpus_ground_truth(tmp_path):
    corpus = synth.generate_corpus(tmp_path / "c.log", n_windows=30, n_normal=6, n_alert=2, anomaly_rate=0.3, seed=1)
    lines = read_raw_log(corpus.path)
    assert len(lines) == corpus.n_lines == 3000
    flags = [line.is_alert for line in lines]
    assert np.array_equal(np.array(flags, dtype=int), corpus.alert_flags)
    windows = windowize(drain_parse(lines)[1], flags, 100)
    assert [w.label for w in windows] == corpus.window_labels.tolist()
    normal = corpus.line_kinds[corpus.line_kinds >= 0]
    assert np.array_equal(normal, np.arange(normal.size) % 6)
    with pytest.raises(ConfigurationError):
        synth.generate_corpus(tmp_path / "x.log", n_normal=0)
