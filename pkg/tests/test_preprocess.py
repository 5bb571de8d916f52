"""Text cleaning, vocabulary, encoding, calendar features, scaling."""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmfuse.errors import DataError
from cmfuse.preprocess import (OOV_ID, PAD_ID, Example, LabelMap,
                               TemporalScaler, apply_scaler, build_vocab,
                               clean_text, encode_text, extract_temporal,
                               fit_scaler)

RNG = np.random.default_rng(2024)


def civil_from_days(z):
    """Independent proleptic-Gregorian converter (era decomposition),
    used only as an oracle; shares no code with the implementation."""
    z += 719468
    era = (z if z >= 0 else z - 146096) // 146097
    doe = z - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    y = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    d = doy - (153 * mp + 2) // 5 + 1
    m = mp + 3 if mp < 10 else mp - 9
    return y + (m <= 2), m, d


def oracle_temporal(ts):
    days, rem = divmod(ts, 86400)
    _, month, day = civil_from_days(days)
    hour = rem // 3600
    weekday = (days + 3) % 7  # epoch day was a Thursday, Monday = 0
    weekend = 1.0 if weekday >= 5 else 0.0
    working = 1.0 if (9 <= hour <= 17 and weekend == 0.0) else 0.0
    return np.array([month, day, hour, weekday, working, weekend], dtype=np.float64)


class TestCleanText:
    def test_empty_in_empty_out(self):
        assert clean_text("", "") == ""

    def test_lowercase_and_punctuation(self):
        assert clean_text("Hello WORLD!!", "") == "hello world"

    def test_url_sentinel(self):
        assert clean_text("see https://x.y/z now", "") == "see <url> now"

    def test_www_url(self):
        assert clean_text("", "go to www.example.com/page?a=1 today") == "go to <url> today"

    def test_title_and_body_joined(self):
        assert clean_text("A title", "and a body") == "a title and a body"

    def test_apostrophes_survive(self):
        assert clean_text("I don't know", "") == "i don't know"

    def test_whitespace_collapsed(self):
        assert clean_text("a\t\tb", "  c\n\nd  ") == "a b c d"

    def test_idempotent_on_examples(self):
        for title, body in [("Hello!!", "see https://a.b c"), ("", ""),
                            ("MiXeD 123", "don't @me")]:
            once = clean_text(title, body)
            assert clean_text(once, "") == once

    @given(st.text(max_size=200), st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_property(self, title, body):
        once = clean_text(title, body)
        assert clean_text(once, "") == once


class TestVocab:
    def test_tiny_corpus(self):
        v = build_vocab(["a a b"])
        assert v.token_to_id == {"<pad>": 0, "<oov>": 1, "a": 2, "b": 3}

    def test_reserved_ids(self):
        v = build_vocab(["x"])
        assert PAD_ID == 0 and OOV_ID == 1
        assert v.id_to_token[0] == "<pad>" and v.id_to_token[1] == "<oov>"

    def test_frequency_then_lexicographic_order(self):
        v = build_vocab(["b b c c a"])
        # b and c tie on frequency; b sorts first
        assert v.token_to_id["b"] == 2
        assert v.token_to_id["c"] == 3
        assert v.token_to_id["a"] == 4

    def test_cap_applies(self):
        corpus = [" ".join(f"tok{i:05d}" for i in range(15000))]
        v = build_vocab(corpus, max_tokens=10000)
        assert len(v) == 10002

    def test_deterministic_rebuild(self):
        corpus = [" ".join(RNG.choice(["a", "b", "c", "dd", "ee"], size=50))]
        assert build_vocab(corpus).id_to_token == build_vocab(corpus).id_to_token

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            build_vocab(["", "   "])

    def test_oov_lookup(self):
        v = build_vocab(["a"])
        assert v.id_of("never-seen") == OOV_ID


class TestEncodeText:
    def test_empty_text_all_pads(self):
        ids, mask = encode_text("", build_vocab(["a"]), max_len=100)
        assert ids == [PAD_ID] * 100
        assert mask == [0] * 100

    def test_short_text_right_padded(self):
        v = build_vocab(["a b c"])
        ids, mask = encode_text("a b c", v, max_len=100)
        assert ids[:3] == [v.id_of("a"), v.id_of("b"), v.id_of("c")]
        assert ids[3:] == [PAD_ID] * 97
        assert mask == [1, 1, 1] + [0] * 97

    def test_long_text_truncated_to_first_tokens(self):
        words = [f"w{i}" for i in range(150)]
        v = build_vocab([" ".join(words)])
        ids, mask = encode_text(" ".join(words), v, max_len=100)
        assert len(ids) == len(mask) == 100
        assert all(m == 1 for m in mask)
        assert ids[0] == v.id_of("w0")
        assert ids[99] == v.id_of("w99")

    def test_mask_matches_pad_positions(self):
        v = build_vocab(["x y"])
        ids, mask = encode_text("x unseen y", v, max_len=6)
        for i, m in enumerate(mask):
            assert (m == 0) == (ids[i] == PAD_ID)


class TestExtractTemporal:
    def test_epoch_anchor(self):
        npt.assert_array_equal(extract_temporal(0), [1, 1, 0, 3, 0, 0])

    def test_reference_timestamp(self):
        # 2022-11-17 06:54:08 UTC, a Thursday before working hours
        npt.assert_array_equal(extract_temporal(1668668048), [11, 17, 6, 3, 0, 0])

    def test_saturday_is_weekend_not_working(self):
        # 2021-06-05 12:00:00 UTC was a Saturday
        vec = extract_temporal(1622894400)
        assert vec[5] == 1.0 and vec[4] == 0.0

    def test_weekday_working_hour(self):
        # epoch + 10h = Thursday 10:00
        vec = extract_temporal(10 * 3600)
        assert vec[4] == 1.0 and vec[5] == 0.0

    def test_negative_timestamp_rejected(self):
        with pytest.raises(DataError):
            extract_temporal(-1)

    def test_matches_independent_calendar(self):
        for ts in RNG.integers(0, 2_000_000_000, size=1000):
            npt.assert_array_equal(extract_temporal(int(ts)), oracle_temporal(int(ts)),
                                   err_msg=f"timestamp {ts}")


class TestScaler:
    def test_full_range_maps_to_unit(self):
        sc = fit_scaler([[1, 0, 0, 0, 0, 0], [12, 1, 1, 1, 1, 1]])
        out = apply_scaler(np.array([12, 0, 0, 0, 0, 0]), sc)
        assert out[0] == 1.0

    def test_constant_feature_maps_to_zero(self):
        sc = fit_scaler([[5, 0, 0, 0, 0, 0], [5, 1, 1, 1, 1, 1]])
        assert apply_scaler(np.array([5, 0, 0, 0, 0, 0]), sc)[0] == 0.0

    def test_training_values_stay_in_unit_interval(self):
        raws = RNG.uniform(0, 30, size=(40, 6))
        sc = fit_scaler(raws)
        for raw in raws:
            out = apply_scaler(raw, sc)
            assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_out_of_range_values_clamped(self):
        sc = fit_scaler([[0, 0, 0, 0, 0, 0], [10, 1, 1, 1, 1, 1]])
        out = apply_scaler(np.array([20, -5, 0.5, 0, 0, 0]), sc)
        assert out[0] == 1.0 and out[1] == 0.0

    def test_needs_a_vector(self):
        with pytest.raises(DataError):
            fit_scaler(np.empty((0, 6)))


class TestLabelMap:
    def test_sorted_stable_assignment(self):
        lm = LabelMap.from_labels(["depression", "anxiety", "bpd", "anxiety"])
        assert lm.names == ["anxiety", "bpd", "depression"]
        assert lm.id_of("bpd") == 1
        assert lm.name_of(2) == "depression"

    def test_unknown_label(self):
        lm = LabelMap.from_labels(["a"])
        with pytest.raises(DataError):
            lm.id_of("b")
        with pytest.raises(DataError):
            lm.name_of(5)


@given(st.text(max_size=300), st.text(max_size=300),
       st.integers(min_value=0, max_value=2_000_000_000))
@settings(max_examples=100, deadline=None)
def test_example_invariants_over_random_posts(title, body, ts):
    vocab = build_vocab(["some base corpus tokens here"])
    text = clean_text(title, body)
    ids, mask = encode_text(text, vocab, max_len=100)
    raw = extract_temporal(ts)
    sc = fit_scaler([raw, raw + 1.0])
    ex = Example(token_ids=ids, mask=mask,
                 temporal=[float(v) for v in apply_scaler(raw, sc)], label=0)
    assert len(ex.token_ids) == 100 and len(ex.mask) == 100
    assert all((m == 0) == (t == PAD_ID) for m, t in zip(ex.mask, ex.token_ids))
    assert all(0.0 <= v <= 1.0 for v in ex.temporal)
