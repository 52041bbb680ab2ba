"""Token and POS-tag sequences of fixed length, ready for encoding.

Participant text is tokenized, lowercased, and cut or padded to a fixed
budget of 73 word tokens. POS tags come from a small averaged-perceptron
tagger trained on a packaged hand-tagged fixture corpus; a bypass reader
accepts externally tagged token/tag files instead. The tagset is frozen
to the 36 Penn Treebank word tags plus a PAD tag at index 0, which fixes
the one-hot width at 37.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAD_TOKEN = "<pad>"
PAD_TAG = "PAD"
DEFAULT_BUDGET = 73

# 36 Penn Treebank word tags; PAD occupies index 0.
PTB_TAGS = [
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNP", "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
    "VBZ", "WDT", "WP", "WP$", "WRB",
]

FIXTURE_TAGGED = Path(__file__).parent / "fixtures" / "tagged_sentences.txt"


class EmptyText(ValueError):
    pass


class EmptyTagCorpus(ValueError):
    pass


class UnknownTag(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    original_length: int


@dataclass(frozen=True)
class PosTagSequence:
    tags: tuple[str, ...]


class TagSet:
    """The fixed 37-tag inventory with dense indices, PAD at 0."""

    def __init__(self):
        self.tags: tuple[str, ...] = (PAD_TAG, *PTB_TAGS)
        self._index = {t: i for i, t in enumerate(self.tags)}

    def __len__(self):
        return len(self.tags)

    def __contains__(self, tag: str):
        return tag in self._index

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise UnknownTag(f"tag {tag!r} not in tagset") from None


TAGSET = TagSet()


def tokenize(text: str) -> TokenSequence:
    """Whitespace tokenization, lowercased, sentence punctuation dropped.

    Apostrophized forms stay single tokens. Terminal ``.`` ``?`` ``!``
    (standalone or stuck to a word) do not count as words.
    """
    tokens = []
    for piece in text.split():
        word = piece.lower().rstrip(".?!,;:")
        if word:
            tokens.append(word)
    if not tokens:
        raise EmptyText("no word tokens in input text")
    return TokenSequence(tokens=tuple(tokens), original_length=len(tokens))


def fix_length(seq: TokenSequence, budget: int = DEFAULT_BUDGET) -> TokenSequence:
    """Truncate to the first ``budget`` tokens or pad with ``<pad>``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    tokens = seq.tokens[:budget]
    if len(tokens) < budget:
        tokens = tokens + (PAD_TOKEN,) * (budget - len(tokens))
    return TokenSequence(tokens=tokens, original_length=seq.original_length)


def pad_mask(seq: TokenSequence) -> np.ndarray:
    """1.0 at real-token positions, 0.0 at pad positions."""
    n = min(seq.original_length, len(seq.tokens))
    mask = np.zeros(len(seq.tokens))
    mask[:n] = 1.0
    return mask


# ---------------------------------------------------------------------------
# averaged perceptron tagger

class PerceptronTaggerModel:
    """Greedy left-to-right averaged perceptron over a fixed tagset.

    Words that were unambiguous in training are looked up directly; all
    others are scored feature-by-feature. Ties break toward the earlier
    tag in tagset order, and a model that has learned nothing about a
    word defaults to NN.
    """

    def __init__(self, weights: dict[str, dict[str, float]] | None = None,
                 tagdict: dict[str, str] | None = None):
        self.weights = weights if weights is not None else {}
        self.tagdict = tagdict if tagdict is not None else {}
        self._candidates = PTB_TAGS

    # feature templates: keep them cheap and purely local
    @staticmethod
    def _features(tokens: tuple[str, ...], i: int, prev: str, prev2: str) -> list[str]:
        word = tokens[i]
        before = tokens[i - 1] if i > 0 else "-START-"
        after = tokens[i + 1] if i + 1 < len(tokens) else "-END-"
        return [
            "bias",
            "w=" + word,
            "suf3=" + word[-3:],
            "pre1=" + word[:1],
            "p1t=" + prev,
            "p2t=" + prev2,
            "p1t+w=" + prev + "+" + word,
            "p1w=" + before,
            "n1w=" + after,
        ]

    def _score(self, feats: list[str]) -> dict[str, float]:
        scores: dict[str, float] = {}
        for f in feats:
            per_tag = self.weights.get(f)
            if not per_tag:
                continue
            for tag, w in per_tag.items():
                scores[tag] = scores.get(tag, 0.0) + w
        return scores

    def predict_word(self, tokens: tuple[str, ...], i: int,
                     prev: str, prev2: str) -> str:
        word = tokens[i]
        direct = self.tagdict.get(word)
        if direct is not None:
            return direct
        scores = self._score(self._features(tokens, i, prev, prev2))
        if not scores or all(v == 0.0 for v in scores.values()):
            return "NN"
        # max() keeps the earliest maximum, i.e. ties break by tagset order
        return max(self._candidates, key=lambda t: scores.get(t, 0.0))

    def save(self, path: str | Path):
        """Versioned flat file: ``PTAG v1`` header, then
        feature<TAB>tag<TAB>weight lines. Tag-dictionary entries are
        stored under the reserved feature prefix ``!tagdict``."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("PTAG v1\n")
            for word in sorted(self.tagdict):
                fh.write(f"!tagdict {word}\t{self.tagdict[word]}\t1.0\n")
            for feat in sorted(self.weights):
                for tag in sorted(self.weights[feat]):
                    w = self.weights[feat][tag]
                    if w != 0.0:
                        fh.write(f"{feat}\t{tag}\t{w!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "PerceptronTaggerModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != "PTAG v1":
                raise ValueError(f"unsupported tagger file header {header!r}")
            weights: dict[str, dict[str, float]] = {}
            tagdict: dict[str, str] = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                feat, tag, w = line.split("\t")
                if feat.startswith("!tagdict "):
                    tagdict[feat[len("!tagdict "):]] = tag
                else:
                    weights.setdefault(feat, {})[tag] = float(w)
        return cls(weights=weights, tagdict=tagdict)


def train_tagger(tagged_corpus: list[list[tuple[str, str]]], epochs: int = 5,
                 seed: int = 0) -> PerceptronTaggerModel:
    """Train an averaged perceptron on (token, gold tag) sentences.

    Update order matters for exact reproducibility, so training is
    single-threaded with a seeded shuffle between epochs.
    """
    if not tagged_corpus:
        raise EmptyTagCorpus("no tagged sentences to train on")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    for sent in tagged_corpus:
        for _, tag in sent:
            if tag not in TAGSET or tag == PAD_TAG:
                raise UnknownTag(f"gold tag {tag!r} not in tagset")

    # unambiguous frequent words go straight to the tag dictionary
    tag_counts: dict[str, dict[str, int]] = {}
    for sent in tagged_corpus:
        for word, gold in sent:
            counts = tag_counts.setdefault(word, {})
            counts[gold] = counts.get(gold, 0) + 1
    tagdict = {w: next(iter(c)) for w, c in tag_counts.items()
               if len(c) == 1 and sum(c.values()) >= 2}

    model = PerceptronTaggerModel(tagdict=tagdict)
    totals: dict[tuple[str, str], float] = {}
    tstamps: dict[tuple[str, str], int] = {}
    instance = 0

    def upd(feat: str, tag: str, delta: float):
        key = (feat, tag)
        cur = model.weights.setdefault(feat, {}).get(tag, 0.0)
        totals[key] = totals.get(key, 0.0) + (instance - tstamps.get(key, 0)) * cur
        tstamps[key] = instance
        model.weights[feat][tag] = cur + delta

    rng = random.Random(seed)
    order = list(range(len(tagged_corpus)))
    for _ in range(epochs):
        rng.shuffle(order)
        for si in order:
            sent = tagged_corpus[si]
            tokens = tuple(w for w, _ in sent)
            prev, prev2 = "-START-", "-START2-"
            for i, (word, gold) in enumerate(sent):
                instance += 1
                if word in model.tagdict:
                    prev2, prev = prev, model.tagdict[word]
                    continue
                feats = model._features(tokens, i, prev, prev2)
                guess = model.predict_word(tokens, i, prev, prev2)
                if guess != gold:
                    for f in feats:
                        upd(f, gold, 1.0)
                        upd(f, guess, -1.0)
                prev2, prev = prev, guess

    # average the weights over all update timesteps
    for feat, per_tag in model.weights.items():
        for tag, w in per_tag.items():
            key = (feat, tag)
            total = totals.get(key, 0.0) + (instance - tstamps.get(key, 0)) * w
            per_tag[tag] = total / instance if instance else 0.0
    return model


def tag(model: PerceptronTaggerModel, seq: TokenSequence) -> PosTagSequence:
    """Tag every token; pad tokens always get PAD."""
    tags = []
    prev, prev2 = "-START-", "-START2-"
    for i, word in enumerate(seq.tokens):
        if word == PAD_TOKEN:
            tags.append(PAD_TAG)
            continue
        t = model.predict_word(seq.tokens, i, prev, prev2)
        tags.append(t)
        prev2, prev = prev, t
    return PosTagSequence(tags=tuple(tags))


def tagger_accuracy(model: PerceptronTaggerModel,
                    tagged_corpus: list[list[tuple[str, str]]]) -> float:
    correct = total = 0
    for sent in tagged_corpus:
        seq = TokenSequence(tokens=tuple(w for w, _ in sent),
                            original_length=len(sent))
        predicted = tag(model, seq).tags
        for (_, gold), guess in zip(sent, predicted):
            correct += guess == gold
            total += 1
    return correct / total if total else 0.0


def one_hot(tags: PosTagSequence, tagset: TagSet = TAGSET) -> np.ndarray:
    """[len(tags) x len(tagset)] matrix, one 1.0 per row."""
    mat = np.zeros((len(tags.tags), len(tagset)))
    for row, t in enumerate(tags.tags):
        mat[row, tagset.index(t)] = 1.0
    return mat


# ---------------------------------------------------------------------------
# tagged-text files (training fixture and pre-tagged bypass)

def read_tagged_file(path: str | Path) -> list[list[tuple[str, str]]]:
    """Read ``token<TAB>TAG`` lines; blank lines separate sentences or
    transcripts. Used both for the packaged training fixture and for the
    pre-tagged bypass."""
    groups: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.rstrip()
        if not line:
            if current:
                groups.append(current)
                current = []
            continue
        word, pos = line.split("\t")
        current.append((word, pos))
    if current:
        groups.append(current)
    return groups


def default_tagger() -> PerceptronTaggerModel:
    """Tagger trained on the packaged fixture corpus (deterministic)."""
    return train_tagger(read_tagged_file(FIXTURE_TAGGED), epochs=5, seed=0)
