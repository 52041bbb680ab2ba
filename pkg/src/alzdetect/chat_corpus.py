"""Parsing of CHAT-style interview transcripts into labeled records.

Only the subset of CHAT this project needs is handled: ``*TAG:`` main
tiers with tab-indented continuations, ``@`` metadata lines (``@ID``
carries demographics), and the inline annotation codes that appear in
picture-description interviews. Unknown ``@`` headers are ignored;
unknown bracket codes are deleted and tallied as warnings.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class ChatParseError(ValueError):
    """Base class for transcript parsing failures."""


class MissingParticipantTier(ChatParseError):
    pass


class MalformedTier(ChatParseError):
    pass


class BadDemographics(ChatParseError):
    pass


class EmptyCorpus(ValueError):
    pass


class Gender(Enum):
    FEMALE = "female"
    MALE = "male"
    UNKNOWN = "unknown"


class Label(Enum):
    AD = "ad"
    CT = "ct"


PARTICIPANT = "PAR"
INTERVIEWER = "INV"


@dataclass(frozen=True)
class SpeakerCode:
    """Three-letter tier tag; PAR and INV get dedicated constructors."""

    tag: str

    @property
    def is_participant(self) -> bool:
        return self.tag == PARTICIPANT

    @property
    def is_interviewer(self) -> bool:
        return self.tag == INTERVIEWER


@dataclass(frozen=True)
class Utterance:
    speaker: SpeakerCode
    raw_text: str
    clean_text: str
    index: int


@dataclass(frozen=True)
class Demographics:
    age: int | None  # None only when the source file omits it
    gender: Gender

    def __post_init__(self):
        if self.age is not None and not (0 < self.age <= 130):
            raise BadDemographics(f"age {self.age} out of range")


@dataclass(frozen=True)
class TranscriptRecord:
    transcript_id: str
    participant_id: str
    utterances: tuple[Utterance, ...]
    demographics: Demographics
    label: Label
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class Corpus:
    records: tuple[TranscriptRecord, ...]
    source_manifest: tuple[tuple[str, str], ...] = ()  # (path, transcript_id)


@dataclass(frozen=True)
class StatsReport:
    n_participants: dict[str, int]   # keys: total / ad / ct
    n_transcripts: dict[str, int]
    median_words: dict[str, int]


# ---------------------------------------------------------------------------
# utterance normalization

_FILLER_WORDS = {"uh": "uh", "um": "um", "em": "um", "mm": "um", "hm": "um",
                 "eh": "uh", "er": "uh", "ah": "uh", "oh": "oh"}

_RE_EVENT = re.compile(r"&=\S+")                       # &=laughs
_RE_FILLER = re.compile(r"&[&-]*([A-Za-z']+)")         # &uh / &-um
_RE_RETRACE = re.compile(r"\[(?://|/|x\s*\d+)\]")      # [//] [/] [x 3]
_RE_REPLACE = re.compile(r"(<[^<>]*>|\S+)\s*\[:\s*([^\]]+)\]")  # word [: form]
_RE_POSTCODE = re.compile(r"\[\+[^\]]*\]")             # [+ exc] and kin
_RE_BRACKET = re.compile(r"\[[^\]]*\]")                # any leftover [...] code
_RE_PAUSE = re.compile(r"\(\.{1,3}\)")                 # (.) (..) (...)
_RE_OMITTED = re.compile(r"\(([A-Za-z']+)\)")          # (be)cause
_RE_UNINTELLIGIBLE = re.compile(r"\b(?:xxx|yyy)\b")


def _strip_codes_once(text: str, warnings: list[str] | None) -> str:
    text = _RE_EVENT.sub(" ", text)
    text = _RE_FILLER.sub(lambda m: _FILLER_WORDS.get(m.group(1).lower(), m.group(1).lower()), text)
    text = _RE_RETRACE.sub(" ", text)
    text = _RE_REPLACE.sub(lambda m: m.group(2), text)
    text = _RE_POSTCODE.sub(" ", text)

    def _unknown(m):
        if warnings is not None:
            warnings.append(m.group(0))
        return " "

    text = _RE_BRACKET.sub(_unknown, text)
    text = text.replace("<", " ").replace(">", " ")
    text = _RE_PAUSE.sub(" ", text)
    text = _RE_UNINTELLIGIBLE.sub(" ", text)
    text = _RE_OMITTED.sub(r"\1", text)
    text = text.replace("+...", " ").replace("+//", " ")
    return " ".join(text.split())


def normalize_utterance(raw_text: str, warnings: list[str] | None = None) -> str:
    """Strip CHAT annotation codes from one main-tier body.

    Fillers become plain word tokens so hesitation behaviour survives into
    the token stream; disfluency markers, event codes, pauses and
    unintelligible-speech placeholders vanish. Unknown bracket codes are
    deleted and appended to ``warnings`` when a list is supplied.

    Well-formed input settles in one pass; malformed marker soup (nested or
    dangling codes) can expose new codes once outer ones are removed, so the
    pass repeats until the text stops changing. Every pass removes marker
    characters, which bounds the loop.
    """
    text = " ".join(raw_text.split())
    while True:
        stripped = _strip_codes_once(text, warnings)
        if stripped == text:
            return text
        text = stripped


# ---------------------------------------------------------------------------
# file parsing

_RE_TIER = re.compile(r"^\*([A-Z]{3}):")


def _parse_id_header(value: str) -> Demographics | None:
    """``@ID`` values are pipe-separated; field 3 is the speaker tag,
    field 4 the age as an ``NN;``-prefixed string, field 5 the gender."""
    parts = value.split("|")
    if len(parts) < 5 or parts[2].strip() != PARTICIPANT:
        return None
    age_field = parts[3].strip()
    age: int | None = None
    if age_field and age_field != ";":
        m = re.match(r"^(\d+)", age_field)
        if not m:
            raise BadDemographics(f"unparseable age field {age_field!r}")
        age = int(m.group(1))
    gender_field = parts[4].strip().lower()
    if gender_field.startswith("f"):
        gender = Gender.FEMALE
    elif gender_field.startswith("m"):
        gender = Gender.MALE
    else:
        gender = Gender.UNKNOWN
    return Demographics(age=age, gender=gender)


def parse_chat_file(content: str, label: Label, transcript_id: str = "",
                    participant_id: str = "") -> TranscriptRecord:
    """Parse one CHAT file into a TranscriptRecord.

    Main tiers are ``*TAG:<TAB>text`` with tab-indented continuation
    lines; ``@`` lines are metadata. Dependent ``%`` tiers are skipped.
    """
    demographics = Demographics(age=None, gender=Gender.UNKNOWN)
    warnings: list[str] = []
    tiers: list[tuple[str, str]] = []  # (speaker tag, joined raw body)

    pending_tag: str | None = None
    pending_body: list[str] = []

    def flush():
        nonlocal pending_tag
        if pending_tag is not None:
            tiers.append((pending_tag, " ".join(pending_body)))
            pending_tag = None
            pending_body.clear()

    for line in content.splitlines():
        if not line.strip():
            continue
        if line.startswith("\t") or line.startswith("    "):
            if pending_tag is not None:
                pending_body.append(line.strip())
            continue
        if line.startswith("@"):
            flush()
            if ":" in line:
                key, value = line[1:].split(":", 1)
                if key.strip() == "ID":
                    demo = _parse_id_header(value.strip())
                    if demo is not None:
                        demographics = demo
            continue
        if line.startswith("*"):
            flush()
            m = _RE_TIER.match(line)
            if not m:
                raise MalformedTier(f"bad tier line: {line.strip()!r}")
            pending_tag = m.group(1)
            pending_body.append(line[m.end():].strip())
            continue
        if line.startswith("%"):
            flush()
            continue
        # stray non-tab-indented text: treat as continuation of the open tier
        if pending_tag is not None:
            pending_body.append(line.strip())

    flush()

    utterances = []
    for i, (tag, body) in enumerate(tiers):
        clean = normalize_utterance(body, warnings)
        utterances.append(Utterance(speaker=SpeakerCode(tag), raw_text=body,
                                    clean_text=clean, index=i))

    if not any(u.speaker.is_participant for u in utterances):
        raise MissingParticipantTier("no *PAR: tier in file")

    return TranscriptRecord(
        transcript_id=transcript_id,
        participant_id=participant_id,
        utterances=tuple(utterances),
        demographics=demographics,
        label=label,
        warnings=tuple(warnings),
    )


def extract_participant_text(record: TranscriptRecord) -> str:
    """Concatenated clean text of participant utterances, file order."""
    parts = [u.clean_text for u in record.utterances
             if u.speaker.is_participant and u.clean_text]
    return " ".join(parts)


def participant_word_count(record: TranscriptRecord) -> int:
    """Words spoken by the participant; punctuation tokens do not count."""
    tokens = extract_participant_text(record).split()
    return sum(1 for t in tokens if t.strip(".?!"))


# ---------------------------------------------------------------------------
# corpus assembly

def load_corpus(root: str | Path) -> Corpus:
    """Assemble a corpus from ``<root>/ad/*.cha`` and ``<root>/ct/*.cha``.

    The transcript id is the file stem; the participant id is the stem up
    to the first ``-`` (DementiaBank-style ``<participant>-<visit>`` names).
    """
    root = Path(root)
    records: list[TranscriptRecord] = []
    manifest: list[tuple[str, str]] = []
    for sub, label in (("ad", Label.AD), ("ct", Label.CT)):
        d = root / sub
        if not d.is_dir():
            continue
        for path in sorted(d.glob("*.cha")):
            stem = path.stem
            rec = parse_chat_file(path.read_text(encoding="utf-8"), label,
                                  transcript_id=stem,
                                  participant_id=stem.split("-")[0])
            records.append(rec)
            manifest.append((str(path), stem))
    if not records:
        raise EmptyCorpus(f"no transcripts under {root}/ad or {root}/ct")
    seen = set()
    for r in records:
        if r.transcript_id in seen:
            raise ChatParseError(f"duplicate transcript id {r.transcript_id!r}")
        seen.add(r.transcript_id)
    return Corpus(records=tuple(records), source_manifest=tuple(manifest))


def _lower_median(values: list[int]) -> int:
    """Median of an integer list; for even lengths, the lower of the two
    central values (keeps the statistic integer-valued)."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def corpus_stats(corpus: Corpus) -> StatsReport:
    if not corpus.records:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    by_label = {Label.AD: [], Label.CT: []}
    participants = {Label.AD: set(), Label.CT: set()}
    for rec in corpus.records:
        by_label[rec.label].append(participant_word_count(rec))
        participants[rec.label].add(rec.participant_id)

    def _triple(fn, ad, ct, combined):
        return {"total": fn(combined), "ad": fn(ad) if ad else 0, "ct": fn(ct) if ct else 0}

    ad_counts, ct_counts = by_label[Label.AD], by_label[Label.CT]
    all_counts = ad_counts + ct_counts
    return StatsReport(
        n_participants={"total": len(participants[Label.AD] | participants[Label.CT]),
                        "ad": len(participants[Label.AD]),
                        "ct": len(participants[Label.CT])},
        n_transcripts=_triple(len, ad_counts, ct_counts, all_counts),
        median_words=_triple(_lower_median, ad_counts, ct_counts, all_counts),
    )


def write_manifest(corpus: Corpus, path: str | Path):
    """Line-delimited JSON manifest: one object per transcript."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(json.dumps({
                "transcript_id": rec.transcript_id,
                "participant_id": rec.participant_id,
                "label": rec.label.value,
                "age": rec.demographics.age,
                "gender": rec.demographics.gender.value,
                "word_count": participant_word_count(rec),
            }) + "\n")
