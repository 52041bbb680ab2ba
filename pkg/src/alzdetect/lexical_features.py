"""Embeddings, scalar lexicons, and the 7-slot targeted feature vector.

Every instance carries two token-level matrices (pre-trained word
embeddings and POS one-hots) plus one participant-level vector of seven
scalars in a fixed order: five lexicon means (age of acquisition,
concreteness, familiarity, imageability, sentiment valence), age / 100,
and gender coded Female=1.0, Male=0.0, Unknown=0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chat_corpus import Corpus, Demographics, Gender, Label, TranscriptRecord, extract_participant_text
from .text_pipeline import (
    DEFAULT_BUDGET,
    PAD_TOKEN,
    PerceptronTaggerModel,
    TokenSequence,
    fix_length,
    one_hot,
    pad_mask,
    tag,
    tokenize,
)

# Slot order of the targeted feature vector. The five lexicon slots come
# first, then the two demographic slots.
LEXICON_SLOTS = ("aoa", "concreteness", "familiarity", "imageability", "sentiment")
FEATURE_NAMES = LEXICON_SLOTS + ("age", "gender")

# Index groups used by the ablation harness and by model feature masking.
FEATURE_GROUPS = {
    "psych": (0, 1, 2, 3),
    "sent": (4,),
    "demo": (5, 6),
}

FIXTURE_LEXICON_DIR = Path(__file__).parent / "fixtures" / "lexicons"


class DimensionMismatch(ValueError):
    pass


class EmptyFile(ValueError):
    pass


class BadLexiconFile(ValueError):
    pass


class MissingLexicon(KeyError):
    pass


# ---------------------------------------------------------------------------
# embeddings

class EmbeddingTable:
    """Word -> dense vector lookup; OOV and ``<pad>`` map to zeros."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        self.dim = dim
        self._entries = entries
        self._zero = np.zeros(dim)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, word: str):
        return word in self._entries

    def lookup(self, word: str) -> np.ndarray:
        return self._entries.get(word, self._zero)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read ``word v1 v2 ... vD`` lines; width is set by the first line.

    Duplicate words keep their first occurrence.
    """
    entries: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise DimensionMismatch(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise DimensionMismatch(
                    f"{path}:{lineno}: expected {dim} values, got {len(values)}"
                )
            if word not in entries:
                entries[word] = np.array([float(v) for v in values])
    if dim is None:
        raise EmptyFile(f"{path}: no embedding lines")
    return EmbeddingTable(dim=dim, entries=entries)


def embed(seq: TokenSequence, table: EmbeddingTable) -> np.ndarray:
    """Stack per-token vectors into a [len(seq) x dim] matrix."""
    return np.stack([table.lookup(tok) for tok in seq.tokens])


# ---------------------------------------------------------------------------
# scalar lexicons

@dataclass(frozen=True)
class Lexicon:
    name: str
    entries: dict[str, float]
    declared_range: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.declared_range
        if not lo < hi:
            raise BadLexiconFile(f"{self.name}: range {lo} .. {hi} is empty")
        for word, score in self.entries.items():
            if not lo <= score <= hi:
                raise BadLexiconFile(
                    f"{self.name}: score {score} for {word!r} outside [{lo}, {hi}]"
                )


def load_lexicon(path: str | Path, name: str) -> Lexicon:
    """Read a ``word<TAB>score`` file headed by ``# range lo hi``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise EmptyFile(f"{path}: empty lexicon file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "#" or header[1] != "range":
        raise BadLexiconFile(f"{path}: first line must be '# range lo hi'")
    try:
        lo, hi = float(header[2]), float(header[3])
    except ValueError as exc:
        raise BadLexiconFile(f"{path}: bad range bounds") from exc
    entries: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise BadLexiconFile(f"{path}:{lineno}: expected word<TAB>score")
        try:
            entries[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise BadLexiconFile(f"{path}:{lineno}: bad score {parts[1]!r}") from exc
    return Lexicon(name=name, entries=entries, declared_range=(lo, hi))


def load_lexicon_dir(root: str | Path) -> dict[str, Lexicon]:
    """Load the five named lexicons (``<slot>.tsv``) from one directory."""
    root = Path(root)
    lexicons = {}
    for slot in LEXICON_SLOTS:
        path = root / f"{slot}.tsv"
        if not path.exists():
            raise MissingLexicon(slot)
        lexicons[slot] = load_lexicon(path, slot)
    return lexicons


def fixture_lexicons() -> dict[str, Lexicon]:
    return load_lexicon_dir(FIXTURE_LEXICON_DIR)


def _real_tokens(seq: TokenSequence) -> tuple[str, ...]:
    n = min(seq.original_length, len(seq.tokens))
    return seq.tokens[:n]


def mean_lexicon_score(seq: TokenSequence, lex: Lexicon) -> tuple[float, float]:
    """Mean score over non-pad tokens found in the lexicon.

    Tokens absent from the lexicon are excluded from both numerator and
    denominator. Returns (mean, coverage); zero coverage gives mean 0.0.
    """
    tokens = _real_tokens(seq)
    scores = [lex.entries[t] for t in tokens if t in lex.entries]
    if not tokens or not scores:
        return 0.0, 0.0
    return sum(scores) / len(scores), len(scores) / len(tokens)


@dataclass(frozen=True)
class TargetedFeatureVector:
    aoa: float
    concreteness: float
    familiarity: float
    imageability: float
    sentiment: float
    age: float
    gender: float

    def as_array(self) -> np.ndarray:
        return np.array([
            self.aoa, self.concreteness, self.familiarity,
            self.imageability, self.sentiment, self.age, self.gender,
        ])


@dataclass(frozen=True)
class CoverageReport:
    fractions: dict[str, float]


_GENDER_CODE = {Gender.FEMALE: 1.0, Gender.MALE: 0.0, Gender.UNKNOWN: 0.5}


def build_feature_vector(
    seq: TokenSequence,
    lexicons: dict[str, Lexicon],
    demo: Demographics,
) -> TargetedFeatureVector:
    """Assemble the 7-vector [5 lexicon means, age/100, gender code]."""
    means = {}
    for slot in LEXICON_SLOTS:
        if slot not in lexicons:
            raise MissingLexicon(slot)
        means[slot], _ = mean_lexicon_score(seq, lexicons[slot])
    age = 0.0 if demo.age is None else demo.age / 100.0
    return TargetedFeatureVector(
        aoa=means["aoa"],
        concreteness=means["concreteness"],
        familiarity=means["familiarity"],
        imageability=means["imageability"],
        sentiment=means["sentiment"],
        age=age,
        gender=_GENDER_CODE[demo.gender],
    )


def coverage_report(seq: TokenSequence, lexicons: dict[str, Lexicon]) -> CoverageReport:
    fractions = {}
    for slot in LEXICON_SLOTS:
        if slot not in lexicons:
            raise MissingLexicon(slot)
        _, fractions[slot] = mean_lexicon_score(seq, lexicons[slot])
    return CoverageReport(fractions=fractions)


# ---------------------------------------------------------------------------
# instance assembly

@dataclass(frozen=True)
class EncodedInstance:
    """One training example, fully numeric."""

    transcript_id: str
    participant_id: str
    embeddings: np.ndarray   # [budget x dim]
    pos_onehot: np.ndarray   # [budget x |tagset|]
    features: np.ndarray     # [7]
    mask: np.ndarray         # [budget], 1.0 real / 0.0 pad
    label: int               # 1 = positive (dementia), 0 = control


def encode_record(
    record: TranscriptRecord,
    table: EmbeddingTable,
    lexicons: dict[str, Lexicon],
    tagger: PerceptronTaggerModel,
    budget: int = DEFAULT_BUDGET,
) -> EncodedInstance:
    seq = fix_length(tokenize(extract_participant_text(record)), budget)
    tags = tag(tagger, seq)
    return EncodedInstance(
        transcript_id=record.transcript_id,
        participant_id=record.participant_id,
        embeddings=embed(seq, table),
        pos_onehot=one_hot(tags),
        features=build_feature_vector(seq, lexicons, record.demographics).as_array(),
        mask=pad_mask(seq),
        label=1 if record.label is Label.AD else 0,
    )


def encode_corpus(
    corpus: Corpus,
    table: EmbeddingTable,
    lexicons: dict[str, Lexicon],
    tagger: PerceptronTaggerModel,
    budget: int = DEFAULT_BUDGET,
) -> list[EncodedInstance]:
    return [encode_record(r, table, lexicons, tagger, budget) for r in corpus.records]
