import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentattn.segmenter import CLS_ID, SEP_ID, EmptyText, segment, tokenize

GOLDEN = json.loads((Path(__file__).parent / "data" / "segmenter_golden.json").read_text())

# frozen FNV-1a bucket ids at v_buckets=32768; pins the hash byte-for-byte
TOKEN_ID_PINS = {"a": 27792, "cat": 9003, ".": 2997, "the": 21888}


@pytest.mark.parametrize("case", GOLDEN, ids=[c["text"][:25] for c in GOLDEN])
def test_golden_file(case):
    got = [s.text for s in segment(case["text"], k_max=128)]
    assert got == case["sentences"]


class TestSegment:
    def test_two_plain_sentences(self):
        assert len(segment("This is A. This is B.", 128)) == 2

    def test_abbreviation_blocks_split(self):
        assert len(segment("See Fig. 2 for details.", 128)) == 1

    def test_decimal_blocks_split(self):
        assert len(segment("Accuracy was 3.14 percent.", 128)) == 1

    def test_no_boundary_single_sentence(self):
        out = segment("just some words without end", 128)
        assert [s.text for s in out] == ["just some words without end"]

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            segment("   \n\t ", 128)

    def test_k_max_truncates_tail(self):
        text = " ".join(f"Sentence number {i} ends. And" for i in range(10))
        assert len(segment(text, 3)) == 3

    def test_spans_point_into_source(self):
        text = "First bit ends. Second bit follows."
        for s in segment(text, 128):
            assert text[s.start : s.end] == s.text

    @settings(max_examples=60)
    @given(st.text(min_size=1, max_size=300), st.integers(1, 20))
    def test_span_and_count_invariants(self, text, k_max):
        if not text.strip():
            with pytest.raises(EmptyText):
                segment(text, k_max)
            return
        out = segment(text, k_max)
        assert 1 <= len(out) <= k_max
        prev_end = -1
        for s in out:
            assert s.text
            assert not s.text[0].isspace() and not s.text[-1].isspace()
            assert s.start >= prev_end
            assert text[s.start : s.end] == s.text
            prev_end = s.end

    @settings(max_examples=60)
    @given(st.text(min_size=1, max_size=300))
    def test_resegmenting_a_sentence_is_stable(self, text):
        if not text.strip():
            return
        for s in segment(text, 64):
            again = segment(s.text, 64)
            assert [x.text for x in again] == [s.text]

    def test_deterministic(self):
        text = "One thing. Another thing! A third? Yes."
        assert segment(text, 128) == segment(text, 128)


class TestTokenize:
    def test_punctuation_detached(self):
        ids = tokenize("A cat.", t_max=16, v_buckets=32768)
        assert ids.tolist() == [CLS_ID, TOKEN_ID_PINS["a"], TOKEN_ID_PINS["cat"], TOKEN_ID_PINS["."], SEP_ID]

    def test_repeated_token_same_id(self):
        ids = tokenize("spin spin", t_max=8, v_buckets=64)
        assert ids[1] == ids[2]

    def test_truncation(self):
        text = " ".join(f"w{i}" for i in range(100))
        ids = tokenize(text, t_max=10, v_buckets=64)
        assert len(ids) == 10
        assert ids[0] == CLS_ID and ids[-1] == SEP_ID
        full = tokenize(text, t_max=256, v_buckets=64)
        assert ids[1:-1].tolist() == full[1 : 1 + 8].tolist()

    def test_wrapping_punctuation(self):
        ids = tokenize("(cap).", t_max=16, v_buckets=512)
        bare = tokenize("( cap ) .", t_max=16, v_buckets=512)
        assert ids.tolist() == bare.tolist()

    @settings(max_examples=80)
    @given(st.text(min_size=1, max_size=120), st.integers(3, 40), st.integers(1, 5000))
    def test_length_and_reserved_id_invariants(self, text, t_max, v_buckets):
        if not text.split():
            return
        ids = tokenize(text, t_max, v_buckets)
        assert 3 <= len(ids) <= t_max
        assert ids[0] == CLS_ID and ids[-1] == SEP_ID
        assert all(4 <= t < 4 + v_buckets for t in ids[1:-1])

    def test_t_max_floor(self):
        with pytest.raises(ValueError):
            tokenize("word", t_max=2, v_buckets=8)
