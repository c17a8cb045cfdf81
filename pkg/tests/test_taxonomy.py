import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import trigram_cosine
from skillscope.taxonomy import (
    DanglingParentError,
    DuplicateLabelError,
    EmptyIdentifierError,
    EmptyTaxonomyError,
    EmptyTokensError,
    LabelCandidate,
    MalformedTaxonomyError,
    display_path,
    load_taxonomy,
    similarity,
    snap,
    split_identifier,
)


def doc(domains, subdomains=(), version="t-1"):
    return json.dumps(
        {"version": version, "domains": list(domains), "subdomains": list(subdomains)}
    ).encode()


def dom(i, name=None, lexicon=("word",)):
    return {
        "id": i,
        "display_name": name or i.title(),
        "description": "",
        "lexicon": list(lexicon),
    }


class TestLoad:
    def test_seed_has_full_label_space(self, seed_taxonomy):
        assert len(seed_taxonomy.domains) == 31
        assert len(seed_taxonomy.subdomains) == 186
        assert seed_taxonomy.label_count == 217

    def test_label_order_stable_across_reloads(self, seed_taxonomy):
        from skillscope.taxonomy import seed_taxonomy as load

        assert load().label_order == seed_taxonomy.label_order
        # domains first, then subdomains grouped under their parent
        order = seed_taxonomy.label_order
        assert list(order[:31]) == [d.id for d in seed_taxonomy.domains]
        assert all("/" in label for label in order[31:])

    def test_empty_taxonomy(self):
        with pytest.raises(EmptyTaxonomyError):
            load_taxonomy(doc([]))

    def test_dangling_parent(self):
        sub = {"id": "query-execution", "parent": "nonexistent", "display_name": "Query Execution", "lexicon": ["query"]}
        with pytest.raises(DanglingParentError):
            load_taxonomy(doc([dom("database")], [sub]))

    def test_duplicate_domain_id(self):
        with pytest.raises(DuplicateLabelError):
            load_taxonomy(doc([dom("database"), dom("database")]))

    def test_duplicate_subdomain_id_same_parent(self):
        sub = {"id": "s", "parent": "a", "display_name": "S", "lexicon": ["s"]}
        with pytest.raises(DuplicateLabelError):
            load_taxonomy(doc([dom("a")], [sub, dict(sub)]))

    def test_same_subdomain_id_under_two_parents_ok(self):
        subs = [
            {"id": "s", "parent": "a", "display_name": "S", "lexicon": ["s"]},
            {"id": "s", "parent": "b", "display_name": "S", "lexicon": ["s"]},
        ]
        t = load_taxonomy(doc([dom("a"), dom("b")], subs))
        assert t.label_order == ("a", "b", "a/s", "b/s")

    def test_unknown_top_level_field_rejected(self):
        payload = {"version": "x", "domains": [dom("a")], "subdomains": [], "extra": 1}
        with pytest.raises(MalformedTaxonomyError):
            load_taxonomy(json.dumps(payload).encode())

    def test_not_json(self):
        with pytest.raises(MalformedTaxonomyError):
            load_taxonomy(b"not json at all")


class TestSplitIdentifier:
    def test_single_camel_boundary(self):
        assert split_identifier("executeQuery") == ["execute", "query"]

    def test_acronym_run_splits_before_last_capital(self):
        # hand-executed rule: "DBB" + "ackup..." -> the capital run DBB ends
        # before 'M'? run D,B,B followed by lowercase 'a' splits before 'B'
        assert split_identifier("DBBackupManager") == ["db", "backup", "manager"]
        assert split_identifier("HTTPServer") == ["http", "server"]

    def test_single_letter(self):
        assert split_identifier("x") == ["x"]

    def test_underscores_and_digits_separate(self):
        assert split_identifier("load_taxonomy") == ["load", "taxonomy"]
        assert split_identifier("utf8Decoder") == ["utf", "decoder"]
        assert split_identifier("DB2") == ["db"]

    def test_letterless_yields_empty(self):
        assert split_identifier("123_") == []

    def test_empty_is_error(self):
        with pytest.raises(EmptyIdentifierError):
            split_identifier("")

    @given(st.text(alphabet=st.characters(min_codepoint=48, max_codepoint=122), min_size=1))
    def test_letters_preserved(self, ident):
        tokens = split_identifier(ident)
        assert "".join(tokens) == "".join(c.lower() for c in ident if c.isalpha())


class TestSimilarity:
    def test_identical(self):
        assert similarity(["database"], ["database"]) == 1.0

    def test_disjoint(self):
        assert similarity(["database"], ["qqq"]) == 0.0

    def test_typo_value_pinned_by_oracle(self):
        # oracle: " databse " and " database " share 5 trigrams, with 7 and 8
        # trigrams respectively -> 5/sqrt(56)
        expected = 5 / math.sqrt(56)
        assert trigram_cosine(["databse"], ["database"]) == pytest.approx(expected, abs=1e-12)
        got = similarity(["databse"], ["database"])
        assert 0.6 < got < 1.0
        assert got == pytest.approx(expected, abs=1e-12)

    def test_empty_errors(self):
        with pytest.raises(EmptyTokensError):
            similarity([], ["a"])

    @given(
        st.lists(st.text(alphabet="abcdef", min_size=1, max_size=6), min_size=1, max_size=4),
        st.lists(st.text(alphabet="abcdef", min_size=1, max_size=6), min_size=1, max_size=4),
    )
    def test_symmetric_and_reflexive(self, a, b):
        assert similarity(a, b) == pytest.approx(similarity(b, a), abs=1e-12)
        assert similarity(a, a) == 1.0
        assert similarity(a, b) == pytest.approx(trigram_cosine(a, b), abs=1e-12)


class TestSnap:
    def test_typo_snaps_to_database(self, seed_taxonomy):
        # brute-force argmax over all 31 domains with the independent oracle
        cand = split_identifier("Databse")
        best = None
        for d in seed_taxonomy.domains:
            score = trigram_cosine(cand, split_identifier(d.display_name))
            for token in d.lexicon:
                score = max(score, trigram_cosine(cand, [token]))
            if best is None or score > best[1]:
                best = (d.id, score)
        assert best == ("database", pytest.approx(5 / math.sqrt(56), abs=1e-12))
        got = snap(LabelCandidate("Databse", "domain"), seed_taxonomy)
        assert got is not None
        assert got[0] == "database"
        assert got[1] == pytest.approx(5 / math.sqrt(56), abs=1e-12)

    def test_exact_display_name_scores_one(self, seed_taxonomy):
        got = snap(LabelCandidate("Cloud", "domain"), seed_taxonomy)
        assert got == ("cloud", 1.0)

    def test_every_label_snaps_to_itself(self, seed_taxonomy):
        for d in seed_taxonomy.domains:
            assert snap(LabelCandidate(d.display_name, "domain"), seed_taxonomy) == (d.id, 1.0)
        for s in seed_taxonomy.subdomains:
            got = snap(
                LabelCandidate(s.display_name, "subdomain", s.parent_domain_id), seed_taxonomy
            )
            assert got == (s.id, 1.0)

    def test_garbage_is_no_match(self, seed_taxonomy):
        assert snap(LabelCandidate("zzzz", "domain"), seed_taxonomy) is None

    def test_subdomain_restricted_to_parent(self, seed_taxonomy):
        # a UI subdomain name must not snap under database even though it is
        # a perfect label elsewhere
        got = snap(LabelCandidate("Theming and Styles", "subdomain", "database"), seed_taxonomy)
        assert got is None or got[0] in {s.id for s in seed_taxonomy.subdomains_of("database")}

    def test_empty_allowed_set_is_no_match(self):
        t = load_taxonomy(doc([dom("a")]))
        assert snap(LabelCandidate("anything", "subdomain", "a"), t) is None

    def test_empty_candidate_errors(self, seed_taxonomy):
        with pytest.raises(EmptyTokensError):
            snap(LabelCandidate("  ", "domain"), seed_taxonomy)

    def test_deterministic(self, seed_taxonomy):
        a = snap(LabelCandidate("Databases!!", "domain"), seed_taxonomy)
        b = snap(LabelCandidate("Databases!!", "domain"), seed_taxonomy)
        assert a == b
        assert a is not None and a[0] == "database"

    def test_tie_breaks_lexicographically(self):
        # two labels with identical lexicons score identically; smaller id wins
        t = load_taxonomy(doc([dom("bbb", "Bbb", ["shared"]), dom("aaa", "Aaa", ["shared"])]))
        got = snap(LabelCandidate("shared", "domain"), t)
        assert got == ("aaa", 1.0)


def test_display_path(seed_taxonomy):
    assert display_path(seed_taxonomy, "database") == "Database"
    assert display_path(seed_taxonomy, "database/query-execution") == "Database → Query Execution"


def test_concurrent_snapping_consistent(seed_taxonomy):
    # the loaded taxonomy is immutable; unrestricted parallel reads must
    # agree with the serial answers
    from concurrent.futures import ThreadPoolExecutor

    names = [d.display_name for d in seed_taxonomy.domains] * 4

    def snap_one(name):
        return snap(LabelCandidate(name, "domain"), seed_taxonomy)

    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(snap_one, names))
    assert parallel == [snap_one(name) for name in names]
