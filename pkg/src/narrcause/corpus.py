"""Reading annotated scene descriptions and the film/genre catalog.

Annotation files hold one token per line with seven tab-separated fields::

    index  surface  lemma  pos  head  deprel  ner

A blank line ends a sentence. A line ``# scene <film_id>\\t<ordinal>`` starts a
new scene; tokens that appear before any such header belong to an implicit
scene named after the file stem with ordinal 0. Other ``#`` lines are comments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import ParseError, ValidationError

ALL_SCOPE = "ALL"
SCENE_HEADER = "# scene "
N_COLUMNS = 7


@dataclass(frozen=True)
class AnnotatedToken:
    index: int
    surface: str
    lemma: str
    pos: str
    head: int
    deprel: str
    ner: str = "O"

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.head < 0:
            raise ValueError(f"head must be >= 0, got {self.head}")
        if self.head == self.index:
            raise ValueError(f"token {self.index} cannot govern itself")
        if not self.pos:
            raise ValueError("empty POS tag")

    def to_row(self) -> str:
        return "\t".join(
            [str(self.index), self.surface, self.lemma, self.pos,
             str(self.head), self.deprel, self.ner])


@dataclass(frozen=True)
class SceneDocument:
    film_id: str
    scene_ordinal: int
    sentences: tuple[tuple[AnnotatedToken, ...], ...] = ()

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def to_dict(self) -> dict:
        return {
            "film_id": self.film_id,
            "scene_ordinal": self.scene_ordinal,
            "sentences": [[list(_token_tuple(t)) for t in s] for s in self.sentences],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneDocument":
        sentences = tuple(
            tuple(AnnotatedToken(*row) for row in sent) for sent in d["sentences"])
        return cls(d["film_id"], int(d["scene_ordinal"]), sentences)


def _token_tuple(t: AnnotatedToken):
    return (t.index, t.surface, t.lemma, t.pos, t.head, t.deprel, t.ner)


@dataclass(frozen=True)
class FilmEntry:
    film_id: str
    title: str
    genres: frozenset[str]
    word_count: int = 0


@dataclass(frozen=True)
class FilmCatalog:
    entries: tuple[FilmEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.film_id in seen:
                raise ValidationError(f"duplicate film_id {e.film_id!r} in catalog")
            if not e.genres:
                raise ValidationError(f"film {e.film_id!r} has no genre")
            seen.add(e.film_id)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def film_ids(self) -> set[str]:
        return {e.film_id for e in self.entries}

    def genres(self) -> list[str]:
        return sorted({g for e in self.entries for g in e.genres})

    def films_per_genre(self) -> dict[str, int]:
        counts = {g: 0 for g in self.genres()}
        for e in self.entries:
            for g in e.genres:
                counts[g] += 1
        return counts

    def words_per_genre(self) -> dict[str, int]:
        counts = {g: 0 for g in self.genres()}
        for e in self.entries:
            for g in e.genres:
                counts[g] += e.word_count
        return counts

    def to_dict(self) -> dict:
        return {"entries": [
            {"film_id": e.film_id, "title": e.title,
             "genres": sorted(e.genres), "word_count": e.word_count}
            for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "FilmCatalog":
        return cls(tuple(
            FilmEntry(e["film_id"], e["title"], frozenset(e["genres"]), int(e["word_count"]))
            for e in d["entries"]))


@dataclass(frozen=True)
class AnalysisScope:
    name: str
    film_ids: frozenset[str] = field(default_factory=frozenset)

    @property
    def is_all(self) -> bool:
        return self.name == ALL_SCOPE


def _parse_int(value: str, path, lineno, what):
    try:
        return int(value)
    except ValueError:
        raise ParseError(path, lineno, f"{what} is not an integer: {value!r}") from None


def parse_annotation_file(path) -> list[SceneDocument]:
    """Parse one annotation file into scene documents, in file order."""
    path = Path(path)
    docs: list[SceneDocument] = []
    film_id, ordinal = path.stem, 0
    sentences: list[tuple[AnnotatedToken, ...]] = []
    current: list[AnnotatedToken] = []
    current_start = 0
    started = False  # an explicit header was seen, or tokens arrived

    def close_sentence():
        nonlocal current
        if current:
            n = len(current)
            for tok in current:
                if tok.head > n:
                    raise ParseError(path, current_start,
                                     f"head {tok.head} outside sentence of {n} tokens")
            sentences.append(tuple(current))
            current = []

    def close_scene():
        nonlocal sentences
        close_sentence()
        if started:
            docs.append(SceneDocument(film_id, ordinal, tuple(sentences)))
        sentences = []

    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                close_sentence()
                continue
            if line.startswith(SCENE_HEADER):
                close_scene()
                parts = line[len(SCENE_HEADER):].split("\t")
                if len(parts) != 2 or not parts[0]:
                    raise ParseError(path, lineno, "scene header must be '# scene film_id<TAB>ordinal'")
                film_id = parts[0]
                ordinal = _parse_int(parts[1], path, lineno, "scene ordinal")
                if ordinal < 0:
                    raise ParseError(path, lineno, "scene ordinal must be non-negative")
                started = True
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != N_COLUMNS:
                raise ParseError(path, lineno, f"expected {N_COLUMNS} columns, got {len(cols)}")
            index = _parse_int(cols[0], path, lineno, "token index")
            head = _parse_int(cols[4], path, lineno, "head")
            try:
                tok = AnnotatedToken(index, cols[1], cols[2], cols[3], head, cols[5], cols[6])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if not current:
                current_start = lineno
            current.append(tok)
            started = True
    close_scene()
    return docs


def format_annotation(docs: Iterable[SceneDocument]) -> str:
    """Serialize documents to the annotation format (inverse of parsing)."""
    out = []
    for doc in docs:
        out.append(f"{SCENE_HEADER}{doc.film_id}\t{doc.scene_ordinal}")
        for sent in doc.sentences:
            out.extend(t.to_row() for t in sent)
            out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_annotation_file(docs: Iterable[SceneDocument], path) -> None:
    Path(path).write_text(format_annotation(docs), encoding="utf-8")


def load_catalog(path) -> FilmCatalog:
    """Read ``film_id,title,genres,word_count`` CSV; genres are pipe-delimited."""
    path = Path(path)
    entries = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, skipinitialspace=True)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty catalog")
        if [h.strip() for h in header] != ["film_id", "title", "genres", "word_count"]:
            raise ParseError(path, 1, "header must be film_id,title,genres,word_count")
        for row in reader:
            lineno = reader.line_num
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(row)}")
            film_id, title, genres, words = (c.strip() for c in row)
            if film_id in seen:
                raise ParseError(path, lineno, f"duplicate film_id {film_id!r}")
            genre_set = frozenset(g.strip() for g in genres.split("|") if g.strip())
            if not genre_set:
                raise ParseError(path, lineno, f"film {film_id!r} has no genre")
            if ALL_SCOPE in genre_set:
                raise ParseError(path, lineno, f"{ALL_SCOPE!r} is reserved")
            word_count = _parse_int(words, path, lineno, "word_count") if words else 0
            seen.add(film_id)
            entries.append(FilmEntry(film_id, title, genre_set, word_count))
    return FilmCatalog(tuple(entries))


def build_scopes(catalog: FilmCatalog) -> list[AnalysisScope]:
    """One scope per genre (sorted by name), then the ALL scope."""
    if not len(catalog):
        raise ValidationError("cannot build scopes from an empty catalog")
    members: dict[str, set[str]] = {}
    for e in catalog:
        for g in e.genres:
            members.setdefault(g, set()).add(e.film_id)
    scopes = [AnalysisScope(g, frozenset(ids)) for g, ids in sorted(members.items())]
    scopes.append(AnalysisScope(ALL_SCOPE, frozenset(catalog.film_ids)))
    return scopes


@dataclass
class CorpusStore:
    """Normalized corpus: the catalog plus every parsed scene."""

    catalog: FilmCatalog
    documents: list[SceneDocument]

    def save(self, path) -> None:
        data = {
            "catalog": self.catalog.to_dict(),
            "documents": [d.to_dict() for d in self.documents],
        }
        Path(path).write_text(json.dumps(data, sort_keys=True, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CorpusStore":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(FilmCatalog.from_dict(data["catalog"]),
                   [SceneDocument.from_dict(d) for d in data["documents"]])


def ingest(corpus_dir, catalog_path) -> CorpusStore:
    """Parse every annotation file under ``corpus_dir`` and check it against the catalog.

    Files are read in sorted path order; scenes are then ordered by
    (film_id, scene_ordinal), so the store does not depend on file layout.
    """
    catalog = load_catalog(catalog_path)
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise ValidationError(f"corpus directory not found: {corpus_dir}")
    known = catalog.film_ids
    docs = []
    seen = set()
    for path in sorted(p for p in corpus_dir.rglob("*") if p.is_file() and not p.name.startswith(".")):
        for doc in parse_annotation_file(path):
            if doc.film_id not in known:
                raise ValidationError(f"{path}: film {doc.film_id!r} is not in the catalog")
            key = (doc.film_id, doc.scene_ordinal)
            if key in seen:
                raise ValidationError(f"{path}: duplicate scene {doc.film_id} #{doc.scene_ordinal}")
            seen.add(key)
            docs.append(doc)
    docs.sort(key=lambda d: (d.film_id, d.scene_ordinal))
    return CorpusStore(catalog, docs)
