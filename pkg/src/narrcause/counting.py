"""Unigram and ordered-pair counts over sliding windows of scene event streams."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote

from .errors import ParseError, ValidationError

CUMULATIVE = "cumulative"
EXACT = "exact"


@dataclass
class PairCountTable:
    scope: str
    window: int
    unigram: Counter = field(default_factory=Counter)
    ordered_pair: Counter = field(default_factory=Counter)
    mode: str = CUMULATIVE

    # tables are not mutated after construction, so totals are cached
    @cached_property
    def total_events(self) -> int:
        return sum(self.unigram.values())

    @cached_property
    def total_ordered_pairs(self) -> int:
        return sum(self.ordered_pair.values())

    def count(self, e1: str, e2: str) -> int:
        """Observed ordered count, no smoothing."""
        self._check(e1, e2)
        return self.ordered_pair.get((e1, e2), 0)

    def _check(self, *lemmas):
        for e in lemmas:
            if self.unigram.get(e, 0) <= 0:
                raise KeyError(f"unknown event {e!r} in scope {self.scope!r}")

    def __add__(self, other: "PairCountTable") -> "PairCountTable":
        if (self.scope, self.window, self.mode) != (other.scope, other.window, other.mode):
            raise ValueError("can only add tables with the same scope, window and mode")
        return PairCountTable(self.scope, self.window, self.unigram + other.unigram,
                              self.ordered_pair + other.ordered_pair, self.mode)


def _lemma(ev) -> str:
    return ev if isinstance(ev, str) else ev.lemma


def count_scope(scenes: Iterable[Sequence], w_max: int = 3, scope: str = "ALL",
                mode: str = CUMULATIVE) -> list[PairCountTable]:
    """Count one table per window size 1..w_max.

    ``scenes`` is an iterable of event streams (lemmas or EventInstances), one
    per scene. Pairs never cross a scene boundary. In cumulative mode window w
    pairs each event with the next w events; in exact mode only with the event
    exactly w positions later.
    """
    if w_max < 1:
        raise ValidationError(f"w_max must be >= 1, got {w_max}")
    if mode not in (CUMULATIVE, EXACT):
        raise ValidationError(f"unknown window mode {mode!r}")
    unigram: Counter = Counter()
    # at_distance[d] holds counts of pairs exactly d events apart
    at_distance = [Counter() for _ in range(w_max + 1)]
    for scene in scenes:
        lemmas = [_lemma(ev) for ev in scene]
        unigram.update(lemmas)
        n = len(lemmas)
        for d in range(1, min(w_max, n - 1) + 1):
            at_distance[d].update(zip(lemmas, lemmas[d:]))
    tables = []
    running: Counter = Counter()
    for w in range(1, w_max + 1):
        if mode == CUMULATIVE:
            running = running + at_distance[w]
            pairs = Counter(running)
        else:
            pairs = Counter(at_distance[w])
        tables.append(PairCountTable(scope, w, Counter(unigram), pairs, mode))
    return tables


def smoothed_count(table: PairCountTable, e1: str, e2: str) -> int:
    """Ordered count of (e1, e2), with unseen pairs counted as 1."""
    return table.count(e1, e2) or 1


def scene_streams(events, film_ids=None) -> list[list]:
    """Group events into per-scene streams ordered by (film, scene, position)."""
    scenes: dict = {}
    for ev in events:
        if film_ids is not None and ev.film_id not in film_ids:
            continue
        scenes.setdefault(ev.scene_key, []).append(ev)
    return [sorted(scenes[k], key=lambda e: e.linear_index) for k in sorted(scenes)]


# -- table files ---------------------------------------------------------------

def scope_dirname(scope: str) -> str:
    return quote(scope, safe="")


def write_tables(tables_by_scope: dict[str, list[PairCountTable]], out_dir) -> None:
    """Layout: ``<out>/<scope>/unigram.tsv`` and ``<out>/<scope>/w<k>.tsv``.

    Every file starts with a ``#`` totals header; data rows are sorted.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for scope, tables in sorted(tables_by_scope.items()):
        d = out_dir / scope_dirname(scope)
        d.mkdir(exist_ok=True)
        first = tables[0]
        lines = [f"# scope={scope}\ttotal_events={first.total_events}"]
        lines += [f"{lemma}\t{n}" for lemma, n in sorted(first.unigram.items())]
        (d / "unigram.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        for t in tables:
            lines = [f"# scope={scope}\twindow={t.window}\tmode={t.mode}"
                     f"\ttotal_ordered_pairs={t.total_ordered_pairs}"]
            lines += [f"{a}\t{b}\t{n}" for (a, b), n in sorted(t.ordered_pair.items())]
            (d / f"w{t.window}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _header(path, line) -> dict:
    if not line.startswith("# "):
        raise ParseError(path, 1, "missing totals header")
    try:
        return dict(kv.split("=", 1) for kv in line[2:].rstrip("\n").split("\t"))
    except ValueError:
        raise ParseError(path, 1, "malformed totals header") from None


def _rows(path, ncols):
    with open(path, encoding="utf-8") as f:
        header = _header(path, f.readline())
        rows = []
        for lineno, line in enumerate(f, 2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != ncols:
                raise ParseError(path, lineno, f"expected {ncols} columns, got {len(cols)}")
            try:
                cols[-1] = int(cols[-1])
            except ValueError:
                raise ParseError(path, lineno, "count is not an integer") from None
            rows.append(cols)
    return header, rows


def read_tables(counts_dir) -> dict[str, list[PairCountTable]]:
    counts_dir = Path(counts_dir)
    out = {}
    for d in sorted(p for p in counts_dir.iterdir() if p.is_dir()):
        uni_path = d / "unigram.tsv"
        if not uni_path.exists():
            continue
        header, rows = _rows(uni_path, 2)
        scope = header["scope"]
        unigram = Counter({lemma: n for lemma, n in rows})
        if sum(unigram.values()) != int(header["total_events"]):
            raise ParseError(uni_path, 1, "total_events does not match the unigram rows")
        tables = []
        w = 1
        while (d / f"w{w}.tsv").exists():
            path = d / f"w{w}.tsv"
            header, rows = _rows(path, 3)
            pairs = Counter({(a, b): n for a, b, n in rows})
            if sum(pairs.values()) != int(header["total_ordered_pairs"]):
                raise ParseError(path, 1, "total_ordered_pairs does not match the pair rows")
            tables.append(PairCountTable(scope, w, Counter(unigram), pairs, header.get("mode", CUMULATIVE)))
            w += 1
        out[scope] = tables
    return out
