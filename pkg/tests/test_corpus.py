"""Data model, JSONL io, pair enumeration, and the synthetic generator."""
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventenergy.corpus import (
    CorpusError,
    EventMention,
    LabelSpaces,
    corpus_stats,
    enumerate_pairs,
    load_corpus,
    synthesize_corpus,
    train_test_split_documents,
    write_corpus,
)
from helpers import make_document, tiny_spaces


class TestLabelSpaces:
    def test_token_label_count_is_classes_plus_two(self):
        spaces = tiny_spaces(n_classes=4)
        assert spaces.token_label_count == 6
        assert spaces.non_trigger_label == 4
        assert spaces.padding_label == 5

    def test_none_and_na_required_exactly_once(self):
        with pytest.raises(CorpusError):
            LabelSpaces(event_classes=("A", "B"), relations=("NA",))
        with pytest.raises(CorpusError):
            LabelSpaces(event_classes=("None", "None"), relations=("NA",))
        with pytest.raises(CorpusError):
            LabelSpaces(event_classes=("None",), relations=("R1",))

    def test_index_lookups(self):
        spaces = tiny_spaces()
        assert spaces.event_index("EVT1") == 1
        assert spaces.relation_index("NA") == spaces.na_index
        with pytest.raises(CorpusError):
            spaces.event_index("missing")


class TestMentionAndDocument:
    def test_trigger_index_bounds(self):
        with pytest.raises(CorpusError):
            EventMention(tokens=("a", "b"), trigger_index=0, event_class=0, mention_id="m")
        with pytest.raises(CorpusError):
            EventMention(tokens=("a", "b"), trigger_index=3, event_class=0, mention_id="m")
        m = EventMention(tokens=("a', 'b", "c"), trigger_index=2, event_class=1, mention_id="m")
        assert m.trigger_index == 2

    def test_document_rejects_bad_pairs(self):
        mention = (("a",), 1, 0)
        with pytest.raises(CorpusError):
            make_document("d", [mention, mention], relations={(1, 1): 1})
        with pytest.raises(CorpusError):
            make_document("d", [mention, mention], relations={(0, 5): 1})


class TestLoadAndWrite:
    def _fixture_lines(self):
        return [
            {
                "doc_id": "doc-a",
                "mentions": [
                    {"tokens": ["the", "plant", "exploded"], "trigger_index": 3, "event_class": "EVT1"},
                    {"tokens": ["crews", "responded"], "trigger_index": 2, "event_class": "EVT2"},
                ],
                "relations": [{"i": 0, "j": 1, "label": "CAUSE"}],
            },
            {
                "doc_id": "doc-b",
                "mentions": [
                    {"tokens": ["nothing", "happened"], "trigger_index": 1, "event_class": "None"},
                ],
                "relations": [],
            },
        ]

    def test_fixture_stats_match_hand_count(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("\n".join(json.dumps(x) for x in self._fixture_lines()) + "\n")
        docs, spaces, stats = load_corpus(path)
        assert stats.document_count == 2
        assert stats.mention_count == 3
        assert stats.per_relation == {"CAUSE": 1}
        assert docs[0].relations == {(0, 1): spaces.relation_index("CAUSE")}

    def test_empty_file_returns_supplied_spaces_and_zero_stats(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        spaces = tiny_spaces()
        docs, out_spaces, stats = load_corpus(path, spaces)
        assert docs == []
        assert out_spaces is spaces
        assert (stats.document_count, stats.mention_count, stats.per_relation) == (0, 0, {})

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"doc_id": "ok", "mentions": []}\n{oops\n')
        with pytest.raises(CorpusError, match=r":2:"):
            load_corpus(path)

    def test_unknown_label_with_fixed_spaces(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(self._fixture_lines()[0]) + "\n")
        with pytest.raises(CorpusError, match="unknown event class"):
            load_corpus(path, tiny_spaces(n_classes=2, n_relations=2))

    def test_round_trip_preserves_content(self, tmp_path):
        src = tmp_path / "src.jsonl"
        src.write_text("\n".join(json.dumps(x) for x in self._fixture_lines()) + "\n")
        docs, spaces, _ = load_corpus(src)
        dst = tmp_path / "dst.jsonl"
        write_corpus(docs, spaces, dst)
        original = [json.loads(line) for line in src.read_text().splitlines()]
        rewritten = [json.loads(line) for line in dst.read_text().splitlines()]
        assert rewritten == original

    @settings(max_examples=30, deadline=None)
    @given(data=st.data())
    def test_round_trip_arbitrary_corpora(self, data, tmp_path_factory):
        token = st.text(alphabet="abcxyz", min_size=1, max_size=4)
        spaces = tiny_spaces(n_classes=3, n_relations=3)
        documents = []
        n_docs = data.draw(st.integers(1, 4))
        for d in range(n_docs):
            n_mentions = data.draw(st.integers(1, 4))
            specs = []
            for _ in range(n_mentions):
                tokens = data.draw(st.lists(token, min_size=1, max_size=5))
                trigger = data.draw(st.integers(1, len(tokens)))
                cls = data.draw(st.integers(0, 2))
                specs.append((tokens, trigger, cls))
            relations = {}
            for i in range(n_mentions):
                for j in range(i + 1, n_mentions):
                    if data.draw(st.booleans()):
                        relations[(i, j)] = data.draw(st.integers(1, 2))
            documents.append(make_document(f"doc-{d}", specs, relations))
        path = tmp_path_factory.mktemp("rt") / "c.jsonl"
        write_corpus(documents, spaces, path)
        loaded, loaded_spaces, stats = load_corpus(path, spaces)
        assert loaded == documents
        assert stats.document_count == n_docs
        out = tmp_path_factory.mktemp("rt2") / "c2.jsonl"
        write_corpus(loaded, loaded_spaces, out)
        assert out.read_bytes() == path.read_bytes()

    def test_truncation_to_max_len(self, tmp_path):
        obj = {
            "doc_id": "d",
            "mentions": [{"tokens": ["a"] * 10, "trigger_index": 2, "event_class": "None"}],
            "relations": [],
        }
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        docs, _, _ = load_corpus(path, max_len=4)
        assert len(docs[0].mentions[0].tokens) == 4

    def test_trigger_beyond_max_len_rejected(self, tmp_path):
        obj = {
            "doc_id": "d",
            "mentions": [{"tokens": ["a"] * 10, "trigger_index": 9, "event_class": "None"}],
            "relations": [],
        }
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        with pytest.raises(CorpusError, match="beyond max length"):
            load_corpus(path, max_len=4)

    def test_stats_tally_at_published_corpus_shape(self, tmp_path):
        # a corpus written to the document/mention totals of a real ERE
        # benchmark (4480 documents, 112276 mentions); the loader's tallies
        # must reproduce the shape exactly
        n_docs, n_mentions = 4480, 112276
        base, extra = divmod(n_mentions, n_docs)
        path = tmp_path / "shaped.jsonl"
        mention = '{"tokens": ["t"], "trigger_index": 1, "event_class": "None"}'
        with path.open("w") as fh:
            for d in range(n_docs):
                count = base + (1 if d < extra else 0)
                relations = '[{"i": 0, "j": 1, "label": "CAUSE"}]' if count >= 2 and d % 7 == 0 else "[]"
                fh.write(
                    f'{{"doc_id": "d{d}", "mentions": [{", ".join([mention] * count)}], '
                    f'"relations": {relations}}}\n'
                )
        _, _, stats = load_corpus(path)
        assert stats.document_count == 4480
        assert stats.mention_count == 112276
        assert stats.per_relation == {"CAUSE": 640}

    def test_mention_cap_drops_in_document_order(self, tmp_path):
        obj = {
            "doc_id": "d",
            "mentions": [
                {"tokens": [f"t{k}"], "trigger_index": 1, "event_class": "None"} for k in range(5)
            ],
            "relations": [{"i": 0, "j": 4, "label": "REL1"}, {"i": 0, "j": 1, "label": "REL1"}],
        }
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        docs, _, stats = load_corpus(path, mention_cap=3)
        assert len(docs[0].mentions) == 3
        assert docs[0].mentions[0].tokens == ("t0",)
        assert list(docs[0].relations) == [(0, 1)]  # pair touching mention 4 dropped
        assert stats.per_relation == {"REL1": 1}


class TestEnumeratePairs:
    def test_three_mentions_one_annotated(self):
        doc = make_document("d", [(("a",), 1, 1)] * 3, relations={(0, 2): 1})
        pairs = enumerate_pairs(doc, cap=40, na_index=0)
        assert len(pairs) == 3
        assert sum(1 for _, _, r in pairs if r != 0) == 1
        assert (0, 2, 1) in pairs

    def test_cap_forty_on_fifty_mentions(self):
        doc = make_document("d", [(("a",), 1, 1)] * 50)
        assert len(enumerate_pairs(doc, cap=40, na_index=0)) == 780

    def test_cap_below_two_rejected(self):
        doc = make_document("d", [(("a",), 1, 1)] * 3)
        with pytest.raises(ValueError):
            enumerate_pairs(doc, cap=1, na_index=0)

    def test_fewer_than_two_mentions_gives_empty(self):
        doc = make_document("d", [(("a",), 1, 1)])
        assert enumerate_pairs(doc, cap=40, na_index=0) == []

    @settings(max_examples=50, deadline=None)
    @given(
        n_mentions=st.integers(0, 12),
        cap=st.integers(2, 15),
        seed=st.integers(0, 10_000),
    )
    def test_matches_brute_force_enumeration(self, n_mentions, cap, seed):
        import random

        rng = random.Random(seed)
        relations = {}
        for i in range(n_mentions):
            for j in range(i + 1, n_mentions):
                if rng.random() < 0.3:
                    relations[(i, j)] = rng.randint(1, 3)
        doc = make_document("d", [(("a",), 1, 1)] * n_mentions, relations=relations)
        pairs = enumerate_pairs(doc, cap=cap, na_index=0)
        m = min(n_mentions, cap)
        expected = []
        for i in range(m):
            for j in range(m):
                if i < j:
                    expected.append((i, j, relations.get((i, j), 0)))
        assert pairs == expected
        assert len(pairs) == m * (m - 1) // 2


class TestSynthesize:
    def test_deterministic_byte_identical(self, tmp_path):
        a_docs, a_spaces = synthesize_corpus(200, 5, 4, 100, 6, seed=7)
        b_docs, b_spaces = synthesize_corpus(200, 5, 4, 100, 6, seed=7)
        pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_corpus(a_docs, a_spaces, pa)
        write_corpus(b_docs, b_spaces, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seed_differs(self):
        a, _ = synthesize_corpus(20, 4, 3, 60, 4, seed=1)
        b, _ = synthesize_corpus(20, 4, 3, 60, 4, seed=2)
        assert a != b

    def test_single_doc_single_mention_has_no_pairs(self):
        docs, spaces = synthesize_corpus(1, 3, 3, 30, 1, seed=0)
        assert len(docs) == 1
        assert enumerate_pairs(docs[0], cap=40, na_index=spaces.na_index) == []

    def test_class_frequencies_near_uniform_prior(self):
        docs, spaces = synthesize_corpus(2000, 5, 4, 100, 6, seed=13)
        counts = [0] * spaces.n_event_classes
        total = 0
        for doc in docs:
            for m in doc.mentions:
                counts[m.event_class] += 1
                total += 1
        prior = 1.0 / spaces.n_event_classes
        for c in counts:
            assert abs(c / total - prior) / prior <= 0.05

    def test_vocab_smaller_than_classes_rejected(self):
        with pytest.raises(CorpusError, match="vocab_size"):
            synthesize_corpus(5, 10, 3, 9, 2, seed=0)

    def test_bad_length_range_and_na_rate_rejected(self):
        with pytest.raises(CorpusError, match="length_range"):
            synthesize_corpus(5, 3, 3, 30, 2, seed=0, length_range=(0, 4))
        with pytest.raises(CorpusError, match="length_range"):
            synthesize_corpus(5, 3, 3, 30, 2, seed=0, length_range=(8, 4))
        with pytest.raises(CorpusError, match="na_rate"):
            synthesize_corpus(5, 3, 3, 30, 2, seed=0, na_rate=1.0)

    def test_signature_tokens_disjoint_from_background(self):
        docs, _ = synthesize_corpus(50, 4, 3, 80, 5, seed=3)
        triggers = set()
        backgrounds = set()
        for doc in docs:
            for m in doc.mentions:
                for pos, tok in enumerate(m.tokens, start=1):
                    (triggers if pos == m.trigger_index else backgrounds).add(tok)
        assert triggers.isdisjoint(backgrounds)

    def test_relation_rule_depends_on_both_classes(self):
        docs, spaces = synthesize_corpus(300, 5, 4, 100, 6, seed=11)
        by_pair: dict[tuple[int, int], set[int]] = {}
        for doc in docs:
            for (i, j), rel in doc.relations.items():
                key = tuple(sorted((doc.mentions[i].event_class, doc.mentions[j].event_class)))
                by_pair.setdefault(key, set()).add(rel)
        # annotated relation is a function of the unordered class pair
        assert all(len(v) == 1 for v in by_pair.values())
        # and not a function of either class alone
        lefts = {a: {next(iter(v)) for (x, _), v in by_pair.items() if x == a} for a, _ in by_pair}
        assert any(len(v) > 1 for v in lefts.values())


class TestSplit:
    def test_split_deterministic_and_disjoint(self):
        docs, spaces = synthesize_corpus(50, 3, 3, 60, 3, seed=5)
        tr1, te1 = train_test_split_documents(docs, 0.2, seed=9)
        tr2, te2 = train_test_split_documents(docs, 0.2, seed=9)
        assert [d.doc_id for d in tr1] == [d.doc_id for d in tr2]
        assert [d.doc_id for d in te1] == [d.doc_id for d in te2]
        assert len(te1) == 10
        assert {d.doc_id for d in tr1}.isdisjoint({d.doc_id for d in te1})
        stats = corpus_stats(docs, spaces)
        assert stats.document_count == 50
