import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclabel.corpus import FieldSet, PublicationRecord
from hclabel.extraction import (
    BUILTIN,
    PRETAGGED,
    ExtractionError,
    Extractor,
    Pos,
    PosLexicon,
    TaggedToken,
    chunk_noun_phrases,
    default_address_stopwords,
    extract_terms,
    is_single_noun_phrase,
    lemmatize_token,
    normalize,
    normalize_term,
    split_segments,
    tag_tokens,
)

# Expected terms of the sample record, grouped by field.
SAMPLE_TERMS = {
    "title": {"preparation", "compositional gradient polymeric film", "gradient mesh template"},
    "journal": {"polymer"},
    "addresses": {
        "science", "molecular engineering", "shandong provincial key", "pharmaceutical engineering",
        "chemistry", "materials science", "chemical chemical engineering",
    },
    "keywords": {
        "water vapor permeability", "method", "gradient mesh template", "compositional gradient",
        "hydrophobic", "hydrophilic",
    },
}

TERM_RE = re.compile(r"^[a-z0-9]+( [a-z0-9]+)*$")

N, J, O = Pos.NOUN, Pos.ADJECTIVE, Pos.OTHER


def _tt(*pairs):
    return [TaggedToken(t, p) for t, p in pairs]


class TestNormalize:
    def test_hyphenated_label(self):
        assert normalize("Klippel-Trenaunay-Weber Syndrome") == "klippel trenaunay weber syndrome"

    def test_identity(self):
        assert normalize("polymer") == "polymer"

    def test_slash_maps_to_space(self):
        assert normalize("hydrophilic/hydrophobic") == "hydrophilic hydrophobic"

    def test_apostrophe_deleted_and_accent_folded(self):
        assert normalize("Crohn's Disease") == "crohns disease"
        assert normalize("Sjögren  Syndrome") == "sjogren syndrome"

    def test_empty(self):
        assert normalize("--- / ;") == ""

    @given(st.text())
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, s):
        once = normalize(s)
        assert normalize(once) == once


class TestLemmatize:
    @pytest.mark.parametrize("plural,singular", [
        ("films", "film"), ("polymers", "polymer"), ("analysis", "analysis"), ("studies", "study"),
        ("boxes", "box"), ("children", "child"), ("diseases", "disease"), ("class", "class"),
        ("materials", "materials"), ("sciences", "science"),
    ])
    def test_examples(self, plural, singular):
        assert lemmatize_token(plural) == singular


class TestTagger:
    def test_gradient_mesh_template(self):
        assert [t.pos for t in tag_tokens("gradient mesh template")] == [N, N, N]

    def test_function_word(self):
        assert [t.pos for t in tag_tokens("of")] == [O]

    def test_adjective_noun_pattern(self):
        assert [t.pos for t in tag_tokens("compositional gradient polymeric film")] == [J, N, J, N]

    def test_unknown_defaults_to_noun(self):
        assert tag_tokens("zorblat")[0].pos is N

    def test_custom_lexicon(self):
        lex = PosLexicon.parse("zorblat\tJ\n# comment\nglim\tO\n")
        assert [t.pos for t in tag_tokens("zorblat glim film", lex)] == [J, O, N]

    def test_bad_lexicon_tag(self):
        with pytest.raises(ValueError):
            PosLexicon.parse("word\tX\n")


class TestChunker:
    def test_sample_title(self, sample_record):
        terms = set()
        for seg in split_segments(sample_record.title):
            terms.update(chunk_noun_phrases(tag_tokens(seg)))
        assert terms == SAMPLE_TERMS["title"]

    def test_adjective_alone(self):
        assert chunk_noun_phrases(_tt(("polymeric", J))) == []

    def test_other_splits_runs(self):
        assert chunk_noun_phrases(_tt(("bone", N), ("of", O), ("spine", N))) == ["bone", "spine"]

    def test_trailing_adjective_trimmed(self):
        assert chunk_noun_phrases(_tt(("film", N), ("mesh", N), ("polymeric", J))) == ["film mesh"]

    def test_tokens_lemmatized(self):
        assert chunk_noun_phrases(_tt(("polymeric", J), ("films", N))) == ["polymeric film"]


class TestSampleRecordTerms:
    @pytest.mark.parametrize("field", sorted(SAMPLE_TERMS))
    def test_builtin_per_field(self, sample_record, field):
        assert extract_terms(sample_record, {field}, BUILTIN) == SAMPLE_TERMS[field]

    @pytest.mark.parametrize("field", sorted(SAMPLE_TERMS))
    def test_pretagged_per_field(self, sample_record, field):
        assert extract_terms(sample_record, {field}, PRETAGGED) == SAMPLE_TERMS[field]

    def test_seventeen_terms(self, sample_record):
        ex = Extractor()
        per_field = ex.field_terms(sample_record, FieldSet(SAMPLE_TERMS))
        assert sum(len(v) for v in per_field.values()) == 17

    def test_title_keywords_deduplicated(self, sample_record):
        terms = extract_terms(sample_record, {"title", "keywords"})
        assert terms == SAMPLE_TERMS["title"] | SAMPLE_TERMS["keywords"]
        assert len(terms) == 8

    def test_address_stopword_removed(self, sample_record):
        stop = default_address_stopwords() | {"chemistry"}
        terms = extract_terms(sample_record, {"addresses"}, address_stopwords=stop)
        assert terms == SAMPLE_TERMS["addresses"] - {"chemistry"}

    def test_stopword_absent_from_terms_is_noop(self, sample_record):
        stop = default_address_stopwords() | {"technology"}
        terms = extract_terms(sample_record, {"addresses"}, address_stopwords=stop)
        assert terms == SAMPLE_TERMS["addresses"]

    def test_replacing_default_stopwords(self, sample_record):
        # without institutional stop words the unit names stay inside the phrases
        terms = extract_terms(sample_record, {"addresses"}, address_stopwords=set())
        assert {"school chemistry", "college chemical chemical engineering", "academy science"} <= terms


class TestExtractTerms:
    def test_empty_fields(self):
        assert extract_terms(PublicationRecord("x"), {"title", "keywords", "abstract"}) == frozenset()

    def test_binary_per_publication(self):
        once = PublicationRecord("a", abstract="Bone density.")
        many = PublicationRecord("b", abstract=" ".join(["Bone density."] * 10))
        assert extract_terms(once, {"abstract"}) == extract_terms(many, {"abstract"}) == {"bone density"}

    def test_monotone_in_fields(self, sample_record):
        small = extract_terms(sample_record, {"title"})
        assert small <= extract_terms(sample_record, {"title", "journal"})

    def test_pretagged_missing_field_is_error(self):
        r = PublicationRecord("x", title="Some title", journal="J", pretagged_terms={"title": ("some title",)})
        with pytest.raises(ExtractionError, match="journal"):
            extract_terms(r, {"title", "journal"}, PRETAGGED)

    def test_pretagged_absent_field_is_fine(self):
        r = PublicationRecord("x", title="Some title", pretagged_terms={"title": ("Some Titles",)})
        assert extract_terms(r, {"title", "journal"}, PRETAGGED) == {"some title"}


class TestSingleNounPhrase:
    @pytest.mark.parametrize("label,expected", [
        ("Lordosis", True), ("Spinal Curvatures", True), ("Klippel-Trenaunay-Weber Syndrome", True),
        ("Nanoscience & Nanotechnology", False), ("Physics, Applied", False), ("Bone of Spine", False),
    ])
    def test_examples(self, label, expected):
        assert is_single_noun_phrase(label) is expected


@st.composite
def _records(draw):
    txt = st.text(max_size=60)
    return PublicationRecord(
        "r",
        title=draw(txt),
        abstract=draw(st.one_of(st.none(), txt)),
        keywords=tuple(draw(st.lists(txt, max_size=3))),
        journal=draw(st.one_of(st.none(), txt)),
        addresses=tuple(draw(st.lists(txt, max_size=2))),
    )


ALL_FIELDS = FieldSet(["title", "keywords", "abstract", "journal", "addresses"])


class TestFuzz:
    @given(_records())
    @settings(max_examples=200, deadline=None)
    def test_term_invariants(self, record):
        for term in extract_terms(record, ALL_FIELDS):
            assert TERM_RE.match(term), term

    @given(st.text(max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_chunks_end_with_noun(self, text):
        for seg in split_segments(text):
            tagged = tag_tokens(seg)
            terms = chunk_noun_phrases(tagged)
            # every chunk closes on a token tagged noun
            ends = {normalize_term(t.text) for t in tagged if t.pos is Pos.NOUN}
            for term in terms:
                assert term.split()[-1] in ends

    @given(_records(), st.sets(st.sampled_from(sorted(ALL_FIELDS)), min_size=1), st.sets(st.sampled_from(sorted(ALL_FIELDS)), min_size=1))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_fields(self, record, a, b):
        assert extract_terms(record, a) <= extract_terms(record, a | b)
