"""Embeddings, scalar lexicons, and the targeted feature vector."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alzdetect.chat_corpus import Demographics, Gender, Label, parse_chat_file
from alzdetect.lexical_features import (
    FEATURE_GROUPS,
    FEATURE_NAMES,
    LEXICON_SLOTS,
    BadLexiconFile,
    DimensionMismatch,
    EmbeddingTable,
    EmptyFile,
    Lexicon,
    MissingLexicon,
    build_feature_vector,
    coverage_report,
    embed,
    encode_corpus,
    encode_record,
    fixture_lexicons,
    load_embeddings,
    load_lexicon,
    load_lexicon_dir,
    mean_lexicon_score,
)
from alzdetect.text_pipeline import (
    PerceptronTaggerModel,
    TokenSequence,
    fix_length,
    tokenize,
)

# ---------------------------------------------------------------------------
# embeddings


def test_load_embeddings_basic(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("the 0.1 0.2\nboy 0.3 0.4\nthe 9.0 9.0\n")
    table = load_embeddings(path)
    assert table.dim == 2
    assert len(table) == 2
    assert "boy" in table and "girl" not in table
    # duplicates keep the first occurrence
    assert table.lookup("the").tolist() == [0.1, 0.2]


def test_load_embeddings_ragged_line_raises(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("the 0.1 0.2\nboy 0.3\n")
    with pytest.raises(DimensionMismatch):
        load_embeddings(path)


def test_load_embeddings_no_values_raises(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("the\n")
    with pytest.raises(DimensionMismatch):
        load_embeddings(path)


def test_load_embeddings_empty_file_raises(tmp_path):
    path = tmp_path / "vec.txt"
    path.write_text("")
    with pytest.raises(EmptyFile):
        load_embeddings(path)


def test_lookup_oov_and_pad_are_zero_vectors():
    table = EmbeddingTable(3, {"a": np.ones(3)})
    assert table.lookup("zzz").tolist() == [0.0, 0.0, 0.0]
    assert table.lookup("<pad>").tolist() == [0.0, 0.0, 0.0]


def test_embed_stacks_rows():
    table = EmbeddingTable(2, {"a": np.array([1.0, 2.0]), "b": np.array([3.0, 4.0])})
    seq = fix_length(TokenSequence(("a", "b"), 2), budget=3)
    mat = embed(seq, table)
    assert mat.shape == (3, 2)
    assert mat.tolist() == [[1.0, 2.0], [3.0, 4.0], [0.0, 0.0]]


# ---------------------------------------------------------------------------
# scalar lexicons


def test_load_lexicon_parses_header_and_entries(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("# range 1 5\nthe\t2.0\n\nboy\t4.5\n")
    lex = load_lexicon(path, "x")
    assert lex.declared_range == (1.0, 5.0)
    assert lex.entries == {"the": 2.0, "boy": 4.5}


def test_load_lexicon_requires_range_header(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("the\t2.0\n")
    with pytest.raises(BadLexiconFile):
        load_lexicon(path, "x")


def test_load_lexicon_rejects_bad_score(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("# range 1 5\nthe\tabc\n")
    with pytest.raises(BadLexiconFile):
        load_lexicon(path, "x")


def test_load_lexicon_rejects_out_of_range_score(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("# range 1 5\nthe\t7.0\n")
    with pytest.raises(BadLexiconFile):
        load_lexicon(path, "x")


def test_lexicon_rejects_empty_range():
    with pytest.raises(BadLexiconFile):
        Lexicon(name="x", entries={}, declared_range=(5.0, 5.0))


def test_load_lexicon_dir_requires_all_slots(tmp_path):
    (tmp_path / "aoa.tsv").write_text("# range 1 10\nthe\t2.5\n")
    with pytest.raises(MissingLexicon):
        load_lexicon_dir(tmp_path)


def test_fixture_lexicons_cover_all_slots():
    lex = fixture_lexicons()
    assert set(lex) == set(LEXICON_SLOTS)
    assert lex["aoa"].declared_range == (1.0, 10.0)
    assert lex["concreteness"].declared_range == (1.0, 5.0)
    assert lex["familiarity"].declared_range == (1.0, 7.0)
    assert lex["imageability"].declared_range == (1.0, 7.0)
    assert lex["sentiment"].declared_range == (-1.0, 1.0)


def test_fixture_anchor_scores_are_frozen():
    lex = fixture_lexicons()
    anchors = {  # word -> (aoa, concreteness, familiarity, imageability, sentiment)
        "the": (2.5, 1.4, 6.9, 1.5, 0.0),
        "boy": (3.2, 4.9, 6.5, 6.6, 0.1),
        "fell": (3.4, 3.4, 6.0, 4.2, -0.3),
    }
    for word, expected in anchors.items():
        got = tuple(lex[slot].entries[word] for slot in LEXICON_SLOTS)
        assert got == expected, word


# ---------------------------------------------------------------------------
# mean scores


TOY = Lexicon(name="toy", entries={"the": 2.5, "boy": 3.2, "fell": 3.4},
              declared_range=(1.0, 10.0))


def test_mean_score_full_coverage():
    mean, cov = mean_lexicon_score(TokenSequence(("the", "boy"), 2), TOY)
    assert mean == pytest.approx((2.5 + 3.2) / 2)
    assert cov == 1.0


def test_mean_score_misses_are_fully_excluded():
    seq = TokenSequence(("the", "boy", "zorp"), 3)
    mean, cov = mean_lexicon_score(seq, TOY)
    assert mean == pytest.approx((2.5 + 3.2) / 2)  # zorp not in denominator
    assert cov == pytest.approx(2 / 3)


def test_mean_score_zero_coverage_is_zero():
    assert mean_lexicon_score(TokenSequence(("zorp", "blag"), 2), TOY) == (0.0, 0.0)


def test_mean_score_ignores_pad_positions():
    short = TokenSequence(("the", "boy"), 2)
    padded = fix_length(short, budget=10)
    assert mean_lexicon_score(padded, TOY) == mean_lexicon_score(short, TOY)


@given(st.permutations(["the", "boy", "fell", "zorp", "the"]))
def test_mean_score_is_order_invariant(words):
    base = TokenSequence(("the", "boy", "fell", "zorp", "the"), 5)
    shuffled = TokenSequence(tuple(words), 5)
    m0, c0 = mean_lexicon_score(base, TOY)
    m1, c1 = mean_lexicon_score(shuffled, TOY)
    assert m1 == pytest.approx(m0)
    assert c1 == c0


@given(st.integers(min_value=3, max_value=20))
def test_mean_score_is_padding_invariant(budget):
    seq = TokenSequence(("the", "boy", "fell"), 3)
    assert mean_lexicon_score(fix_length(seq, budget), TOY) == mean_lexicon_score(seq, TOY)


# ---------------------------------------------------------------------------
# feature vector


def test_feature_vector_layout():
    assert FEATURE_NAMES == ("aoa", "concreteness", "familiarity",
                             "imageability", "sentiment", "age", "gender")
    assert FEATURE_GROUPS == {"psych": (0, 1, 2, 3), "sent": (4,), "demo": (5, 6)}


def test_feature_vector_hand_computed_example():
    # means over "the boy fell" from the packaged lexicons, worked by hand:
    # aoa          (2.5 + 3.2 + 3.4) / 3 = 9.1  / 3
    # concreteness (1.4 + 4.9 + 3.4) / 3 = 9.7  / 3
    # familiarity  (6.9 + 6.5 + 6.0) / 3 = 19.4 / 3
    # imageability (1.5 + 6.6 + 4.2) / 3 = 12.3 / 3
    # sentiment    (0.0 + 0.1 - 0.3) / 3 = -0.2 / 3
    seq = fix_length(tokenize("the boy fell ."), budget=10)
    vec = build_feature_vector(seq, fixture_lexicons(),
                               Demographics(age=66, gender=Gender.FEMALE))
    expected = [9.1 / 3, 9.7 / 3, 19.4 / 3, 12.3 / 3, -0.2 / 3, 0.66, 1.0]
    assert vec.as_array() == pytest.approx(expected, rel=1e-12)


def test_gender_codes():
    seq = TokenSequence(("the",), 1)
    lex = fixture_lexicons()
    male = build_feature_vector(seq, lex, Demographics(70, Gender.MALE))
    unk = build_feature_vector(seq, lex, Demographics(70, Gender.UNKNOWN))
    assert male.gender == 0.0
    assert unk.gender == 0.5
    assert male.age == pytest.approx(0.70)


def test_missing_age_encodes_as_zero():
    vec = build_feature_vector(TokenSequence(("the",), 1), fixture_lexicons(),
                               Demographics(age=None, gender=Gender.FEMALE))
    assert vec.age == 0.0


def test_feature_vector_requires_all_lexicons():
    lex = dict(fixture_lexicons())
    del lex["sentiment"]
    with pytest.raises(MissingLexicon):
        build_feature_vector(TokenSequence(("the",), 1), lex,
                             Demographics(70, Gender.FEMALE))


def test_coverage_report_fractions():
    report = coverage_report(TokenSequence(("the", "zorp"), 2), fixture_lexicons())
    assert set(report.fractions) == set(LEXICON_SLOTS)
    assert report.fractions["aoa"] == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# instance encoding


def _record(label=Label.AD):
    content = ("@ID:\teng|X|PAR|66;|female|||P|||\n"
               "*PAR:\tthe boy fell .\n")
    return parse_chat_file(content, label, transcript_id="t-0", participant_id="t")


def _table(dim=4):
    rng = np.random.default_rng(0)
    words = ["the", "boy", "fell"]
    return EmbeddingTable(dim, {w: rng.normal(size=dim) for w in words})


def test_encode_record_shapes_and_ids():
    inst = encode_record(_record(), _table(), fixture_lexicons(),
                         PerceptronTaggerModel(), budget=10)
    assert inst.transcript_id == "t-0"
    assert inst.participant_id == "t"
    assert inst.embeddings.shape == (10, 4)
    assert inst.pos_onehot.shape == (10, 37)
    assert inst.features.shape == (7,)
    assert inst.mask.tolist() == [1.0] * 3 + [0.0] * 7
    assert inst.label == 1


def test_encode_record_control_label_is_zero():
    inst = encode_record(_record(Label.CT), _table(), fixture_lexicons(),
                         PerceptronTaggerModel(), budget=10)
    assert inst.label == 0


def test_encode_record_pad_rows():
    inst = encode_record(_record(), _table(), fixture_lexicons(),
                         PerceptronTaggerModel(), budget=10)
    assert np.all(inst.embeddings[3:] == 0.0)          # pad embeddings are zero
    assert np.all(inst.pos_onehot[3:, 0] == 1.0)       # pad tag is column 0


def test_encode_corpus_preserves_order():
    from alzdetect.chat_corpus import Corpus

    recs = (_record(Label.AD), )
    corpus = Corpus(records=recs)
    out = encode_corpus(corpus, _table(), fixture_lexicons(),
                        PerceptronTaggerModel(), budget=10)
    assert [i.transcript_id for i in out] == ["t-0"]
