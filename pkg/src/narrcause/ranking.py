"""High/low pair selection across genres, de-duplication, and overlap analysis."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ALL_SCOPE, FilmCatalog
from .errors import ParseError, ValidationError
from .events import NONE, PERSON, SLOT_VALUES, SOMETHING, ArgCombination, ArgProfile, modal
from .scoring import ScoredPair


@dataclass(frozen=True)
class SelectionConfig:
    high_total: int = 3000
    low_total: int = 6000
    include_self_pairs: bool = False

    def __post_init__(self):
        if self.high_total <= 0 or self.low_total <= 0:
            raise ValidationError("selection totals must be positive")


@dataclass
class Selection:
    high: list[ScoredPair]
    low: list[ScoredPair]
    high_quotas: dict[str, int]
    low_quotas: dict[str, int]
    shortfall: dict[str, dict[str, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class MergedPair:
    """An ordered event pair keyed by its two verb lemmas.

    Also used for pairs read from interchange files, where ``best_cpc`` holds
    the optional score column and ``source_scopes`` is empty.
    """

    e1: str
    e2: str
    args1: ArgCombination = ArgCombination()
    args2: ArgCombination = ArgCombination()
    best_cpc: float | None = None
    source_scopes: frozenset[str] = frozenset()

    @property
    def key(self) -> tuple[str, str]:
        return (self.e1, self.e2)


@dataclass
class OverlapReport:
    k: int
    names: list[str]
    matrix: dict[tuple[str, str], int]

    def to_dict(self) -> dict:
        return {"k": self.k, "names": self.names,
                "matrix": {a: {b: self.matrix[a, b] for b in self.names} for a in self.names}}


@dataclass
class ExternalComparison:
    matches: list[tuple[str, str]]
    n_merged: int
    n_external: int

    @property
    def count(self) -> int:
        return len(self.matches)


def pair_key(item) -> tuple[str, str]:
    if isinstance(item, tuple):
        return (item[0], item[1])
    return (item.e1, item.e2)


def apportion(total: int, weights: Mapping[str, int]) -> dict[str, int]:
    """Largest-remainder apportionment of ``total`` seats by ``weights``.

    Remainder ties go to the heavier weight, then to the earlier name.
    """
    weight_sum = sum(weights.values())
    if weight_sum <= 0:
        raise ValidationError("cannot apportion over zero total weight")
    exact = {name: Fraction(total * w, weight_sum) for name, w in weights.items()}
    quotas = {name: int(q) for name, q in exact.items()}
    left = total - sum(quotas.values())
    order = sorted(weights, key=lambda n: (-(exact[n] - quotas[n]), -weights[n], n))
    for name in order[:left]:
        quotas[name] += 1
    return quotas


def select_extremes(scores: Mapping[str, Sequence[ScoredPair]], catalog: FilmCatalog,
                    config: SelectionConfig = SelectionConfig()) -> Selection:
    """Take each genre's quota from the top and bottom of its CPC ranking.

    Quotas are proportional to the number of films per genre. Pairs already
    taken as high for a genre are not eligible as that genre's low pairs.
    """
    films = catalog.films_per_genre()
    high_q = apportion(config.high_total, films)
    low_q = apportion(config.low_total, films)
    high, low, shortfall = [], [], {}
    for genre in sorted(films):
        ranked = sorted(scores.get(genre, ()), key=lambda p: (-p.cpc, p.e1, p.e2))
        if not config.include_self_pairs:
            ranked = [p for p in ranked if not p.is_self_pair]
        top = ranked[:high_q[genre]]
        taken = {p.key for p in top}
        rest = [p for p in ranked if p.key not in taken]
        bottom = rest[len(rest) - low_q[genre]:] if low_q[genre] < len(rest) else rest
        high.extend(top)
        low.extend(bottom)
        short = {}
        if len(top) < high_q[genre]:
            short["high"] = high_q[genre] - len(top)
        if len(bottom) < low_q[genre]:
            short["low"] = low_q[genre] - len(bottom)
        if short:
            shortfall[genre] = short
    return Selection(high, low, high_q, low_q, shortfall)


def _aggregate_args(lemma, slot, contributors, profiles):
    counts: Counter = Counter()
    if profiles is not None:
        for p in contributors:
            prof = profiles.get(p.scope, {}).get(lemma)
            if prof is not None:
                counts.update(prof.combination_counts)
    if not counts:
        counts.update(getattr(p, slot) for p in contributors)
    return modal(counts).with_subject(PERSON)


def dedup_merge(pairs: Iterable[ScoredPair],
                profiles: Mapping[str, Mapping[str, ArgProfile]] | None = None) -> list[MergedPair]:
    """Collapse selections to one pair per (e1, e2), best CPC first.

    Arguments are the most frequent combination summed over the contributing
    scopes' profiles (or, without profiles, the most common per-scope modal
    combination). A missing subject becomes ``person``.
    """
    groups: dict[tuple[str, str], list[ScoredPair]] = {}
    for p in pairs:
        groups.setdefault(p.key, []).append(p)
    merged = []
    for (e1, e2), group in groups.items():
        merged.append(MergedPair(
            e1, e2,
            _aggregate_args(e1, "args1", group, profiles),
            _aggregate_args(e2, "args2", group, profiles),
            max(p.cpc for p in group),
            frozenset(p.scope for p in group)))
    merged.sort(key=lambda m: (-m.best_cpc, m.e1, m.e2))
    return merged


def top_keys(items: Sequence, k: int) -> list[tuple[str, str]]:
    return [pair_key(x) for x in items[:max(k, 0)]]


def overlap(list_a: Sequence, list_b: Sequence, k: int) -> int:
    return len(set(top_keys(list_a, k)) & set(top_keys(list_b, k)))


def overlap_matrix(lists: Mapping[str, Sequence], k: int = 30) -> OverlapReport:
    names = list(lists)
    tops = {n: set(top_keys(lists[n], k)) for n in names}
    matrix = {(a, b): len(tops[a] & tops[b]) for a in names for b in names}
    return OverlapReport(k, names, matrix)


def unique_to_scope(scope_list: Sequence, other_lists: Iterable[Sequence], k: int) -> list:
    others = set()
    for other in other_lists:
        others.update(top_keys(other, k))
    return [x for x in scope_list[:max(k, 0)] if pair_key(x) not in others]


def compare_external(merged: Sequence, external) -> ExternalComparison:
    """Pairs shared by ``merged`` and an external list (a path or a sequence)."""
    if isinstance(external, (str, Path)):
        external = read_pair_file(external)
    ext_keys = {pair_key(x) for x in external}
    seen = set()
    matches = []
    for x in merged:
        key = pair_key(x)
        if key in ext_keys and key not in seen:
            matches.append(key)
            seen.add(key)
    return ExternalComparison(matches, len(merged), len(ext_keys))


def genre_lists(scores: Mapping[str, Sequence[ScoredPair]], include_self_pairs: bool = False):
    """Per-scope rankings with self pairs dropped, ALL last."""
    out = {}
    for scope in sorted(scores, key=lambda s: (s == ALL_SCOPE, s)):
        ranked = sorted(scores[scope], key=lambda p: (-p.cpc, p.e1, p.e2))
        out[scope] = [p for p in ranked if include_self_pairs or not p.is_self_pair]
    return out


# -- generalized-pair interchange files ----------------------------------------

PAIR_COLUMNS = ("e1_subj", "e1_lemma", "e1_particle", "e1_dobj", "e1_iobj",
                "e2_subj", "e2_lemma", "e2_particle", "e2_dobj", "e2_iobj", "score")
_SLOT_ALIASES = {"smth": SOMETHING, "": NONE}


def _slot(value, path, lineno):
    value = _SLOT_ALIASES.get(value.strip().lower(), value.strip().lower())
    if value not in SLOT_VALUES:
        raise ParseError(path, lineno, f"bad slot value {value!r}")
    return value


def _particle(value):
    value = value.strip()
    return None if value in ("", NONE) else value


def write_pair_file(pairs: Iterable[MergedPair], path) -> None:
    lines = ["\t".join(PAIR_COLUMNS)]
    for p in pairs:
        cols = []
        for lemma, a in ((p.e1, p.args1), (p.e2, p.args2)):
            cols += [a.subj, lemma, a.particle or NONE, a.dobj, a.iobj]
        cols.append("" if p.best_cpc is None else repr(p.best_cpc))
        lines.append("\t".join(cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pair_file(path) -> list[MergedPair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if lineno == 1 and cols[0] == PAIR_COLUMNS[0]:
                continue
            if len(cols) not in (10, 11):
                raise ParseError(path, lineno, f"expected 10 or 11 columns, got {len(cols)}")
            halves = []
            for off in (0, 5):
                subj, lemma, prt, dobj, iobj = cols[off:off + 5]
                if not lemma.strip():
                    raise ParseError(path, lineno, "empty event lemma")
                halves.append((lemma.strip().lower(), ArgCombination(
                    _slot(subj, path, lineno), _slot(dobj, path, lineno),
                    _slot(iobj, path, lineno), _particle(prt))))
            score = None
            if len(cols) == 11 and cols[10].strip():
                try:
                    score = float(cols[10])
                except ValueError:
                    raise ParseError(path, lineno, f"score is not a number: {cols[10]!r}") from None
            (e1, a1), (e2, a2) = halves
            pairs.append(MergedPair(e1, e2, a1, a2, score))
    return pairs
