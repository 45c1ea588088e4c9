"""Verb events with generalized arguments, extracted from parsed scenes."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import AnnotatedToken, SceneDocument
from .errors import ParseError

PERSON = "person"
SOMETHING = "something"
NONE = "none"
SLOT_VALUES = (PERSON, SOMETHING, NONE)
_SLOT_RANK = {v: i for i, v in enumerate(SLOT_VALUES)}

DEFAULT_LIGHT_VERBS = frozenset({"be", "let", "do", "begin", "have", "start", "try"})
PRONOUN_TAGS = frozenset({"PRP", "PRP$", "WP", "WP$"})

SUBJECT_RELS = ("nsubj", "agent")
DOBJ_RELS = ("dobj", "nsubjpass")
IOBJ_RELS = ("iobj",)
PARTICLE_RELS = ("compound:prt",)


@dataclass(frozen=True)
class ArgCombination:
    subj: str = NONE
    dobj: str = NONE
    iobj: str = NONE
    particle: str | None = None

    def sort_key(self):
        # person < something < none; a missing particle sorts after any particle
        return (_SLOT_RANK[self.subj], _SLOT_RANK[self.dobj], _SLOT_RANK[self.iobj],
                self.particle is None, self.particle or "")

    def with_subject(self, value: str = PERSON) -> "ArgCombination":
        if self.subj != NONE:
            return self
        return ArgCombination(value, self.dobj, self.iobj, self.particle)

    def encode(self) -> str:
        return "|".join([self.subj, self.dobj, self.iobj, self.particle or NONE])

    @classmethod
    def decode(cls, text: str) -> "ArgCombination":
        parts = text.split("|")
        if len(parts) != 4 or any(p not in SLOT_VALUES for p in parts[:3]):
            raise ValueError(f"bad argument combination {text!r}")
        return cls(parts[0], parts[1], parts[2], None if parts[3] == NONE else parts[3])


@dataclass(frozen=True)
class EventInstance:
    lemma: str
    subj: str
    dobj: str
    iobj: str
    particle: str | None
    film_id: str
    scene_ordinal: int
    linear_index: int

    @property
    def args(self) -> ArgCombination:
        return ArgCombination(self.subj, self.dobj, self.iobj, self.particle)

    @property
    def scene_key(self) -> tuple[str, int]:
        return (self.film_id, self.scene_ordinal)


@dataclass
class ArgProfile:
    lemma: str
    combination_counts: Counter = field(default_factory=Counter)

    @property
    def modal_combination(self) -> ArgCombination:
        return modal(self.combination_counts)


def modal(counts: Mapping[ArgCombination, int]) -> ArgCombination:
    """Most frequent combination; ties go to the smallest ``sort_key``."""
    if not counts:
        return ArgCombination()
    return min(counts, key=lambda c: (-counts[c], c.sort_key()))


class PersonLexicon:
    """Noun lemmas that generalize to ``person``. Case-insensitive."""

    def __init__(self, entries: Iterable[str] = ()):
        self.entries = frozenset(e.strip().lower() for e in entries if e.strip())

    def __contains__(self, lemma: str) -> bool:
        return lemma.lower() in self.entries

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path) -> "PersonLexicon":
        return cls(_read_word_list(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "PersonLexicon":
        return cls(_read_word_list(_data_text("person_lexicon.txt")))


def _data_text(name: str) -> str:
    return resources.files("narrcause").joinpath("data", name).read_text(encoding="utf-8")


def _read_word_list(text: str) -> list[str]:
    return [ln.split("#", 1)[0].strip() for ln in text.splitlines() if ln.split("#", 1)[0].strip()]


def load_light_verbs(path=None) -> frozenset[str]:
    if path is None:
        return DEFAULT_LIGHT_VERBS
    return frozenset(w.lower() for w in _read_word_list(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ExtractionConfig:
    light_verbs: frozenset[str] = DEFAULT_LIGHT_VERBS
    lexicon: PersonLexicon = field(default_factory=PersonLexicon.default)


def generalize_argument(token: AnnotatedToken, lexicon: PersonLexicon) -> str:
    if token.ner == "PERSON":
        return PERSON
    if token.pos in PRONOUN_TAGS and token.surface.lower() != "it":
        return PERSON
    if token.lemma in lexicon:
        return PERSON
    return SOMETHING


def _is_event(token: AnnotatedToken, light_verbs) -> bool:
    lemma = token.lemma.lower()
    return token.pos.startswith("VB") and bool(lemma) and lemma not in light_verbs


def extract_events(doc: SceneDocument, config: ExtractionConfig | None = None) -> list[EventInstance]:
    """One event per non-light ``VB*`` token, in textual order across sentences."""
    config = config or ExtractionConfig()
    events = []
    for sentence in doc.sentences:
        dependents: dict[int, list[AnnotatedToken]] = {}
        for tok in sentence:
            dependents.setdefault(tok.head, []).append(tok)
        for tok in sentence:
            if not _is_event(tok, config.light_verbs):
                continue
            deps = sorted(dependents.get(tok.index, ()), key=lambda t: t.index)

            def first(rels):
                for d in deps:
                    if d.deprel in rels:
                        return d
                return None

            slots = []
            for rels in (SUBJECT_RELS, DOBJ_RELS, IOBJ_RELS):
                dep = first(rels)
                slots.append(NONE if dep is None else generalize_argument(dep, config.lexicon))
            prt = first(PARTICLE_RELS)
            particle = prt.lemma.lower() if prt is not None else None
            events.append(EventInstance(
                tok.lemma.lower(), slots[0], slots[1], slots[2], particle,
                doc.film_id, doc.scene_ordinal, len(events)))
    return events


def extract_corpus(docs: Iterable[SceneDocument], config: ExtractionConfig | None = None) -> list[EventInstance]:
    config = config or ExtractionConfig()
    out = []
    for doc in docs:
        out.extend(extract_events(doc, config))
    return out


def build_arg_profiles(events: Iterable[EventInstance]) -> dict[str, ArgProfile]:
    profiles: dict[str, ArgProfile] = {}
    for ev in events:
        prof = profiles.get(ev.lemma)
        if prof is None:
            prof = profiles[ev.lemma] = ArgProfile(ev.lemma)
        prof.combination_counts[ev.args] += 1
    return profiles


def merge_profiles(*parts: Mapping[str, ArgProfile]) -> dict[str, ArgProfile]:
    """Pointwise sum of partial profile maps."""
    merged: dict[str, ArgProfile] = {}
    for part in parts:
        for lemma, prof in part.items():
            target = merged.setdefault(lemma, ArgProfile(lemma))
            target.combination_counts.update(prof.combination_counts)
    return merged


# -- event-stream files ------------------------------------------------------

EVENT_COLUMNS = ("film_id", "scene_ordinal", "linear_index", "lemma", "subj", "dobj", "iobj", "particle")


def write_events(events: Iterable[EventInstance], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for ev in events:
            f.write("\t".join([ev.film_id, str(ev.scene_ordinal), str(ev.linear_index), ev.lemma,
                               ev.subj, ev.dobj, ev.iobj, ev.particle or NONE]) + "\n")


def read_events(path) -> list[EventInstance]:
    events = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != len(EVENT_COLUMNS):
                raise ParseError(path, lineno, f"expected {len(EVENT_COLUMNS)} columns, got {len(cols)}")
            film, scene, idx, lemma, subj, dobj, iobj, prt = cols
            if any(v not in SLOT_VALUES for v in (subj, dobj, iobj)):
                raise ParseError(path, lineno, "slot values must be person, something or none")
            try:
                events.append(EventInstance(lemma, subj, dobj, iobj, None if prt == NONE else prt,
                                            film, int(scene), int(idx)))
            except ValueError:
                raise ParseError(path, lineno, "scene_ordinal and linear_index must be integers") from None
    return events


# -- profile files -------------------------------------------------------------

def write_profiles(profiles_by_scope: Mapping[str, Mapping[str, ArgProfile]], path) -> None:
    """TSV rows: scope, lemma, subj|dobj|iobj|particle, count. Sorted."""
    rows = []
    for scope, profiles in profiles_by_scope.items():
        for lemma, prof in profiles.items():
            for combo, n in prof.combination_counts.items():
                rows.append((scope, lemma, combo.encode(), n))
    rows.sort()
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerows(rows)


def read_profiles(path) -> dict[str, dict[str, ArgProfile]]:
    out: dict[str, dict[str, ArgProfile]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ParseError(path, lineno, f"expected 4 columns, got {len(cols)}")
            scope, lemma, combo, n = cols
            try:
                out.setdefault(scope, {}).setdefault(lemma, ArgProfile(lemma)) \
                    .combination_counts[ArgCombination.decode(combo)] += int(n)
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return out
