"""Causal potential scores for ordered event pairs.

Probabilities come straight from a :class:`PairCountTable`::

    P(e)        = unigram(e) / total_events
    P(e1 -> e2) = smoothed(e1, e2) / total_ordered_pairs
    P(e1, e2)   = (smoothed(e1, e2) + smoothed(e2, e1)) / total_ordered_pairs

where ``smoothed`` replaces an unseen ordered count by 1. For a self pair the
two orderings are the same event, so the joint is ``smoothed(e, e)`` alone.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .counting import PairCountTable, smoothed_count
from .errors import NarrCauseError, ParseError, ValidationError
from .events import ArgCombination, ArgProfile


class ScoringError(NarrCauseError):
    pass


def _probabilities(table: PairCountTable, e1: str, e2: str):
    table._check(e1, e2)
    n_events = table.total_events
    n_pairs = table.total_ordered_pairs
    if n_pairs == 0:
        raise ScoringError(f"scope {table.scope!r} window {table.window} has no event pairs")
    forward = smoothed_count(table, e1, e2)
    backward = smoothed_count(table, e2, e1)
    joint = forward if e1 == e2 else forward + backward
    return (table.unigram[e1] / n_events, table.unigram[e2] / n_events,
            joint / n_pairs, forward, backward)


def pmi(table: PairCountTable, e1: str, e2: str) -> float:
    p1, p2, joint, _, _ = _probabilities(table, e1, e2)
    return math.log(joint / (p1 * p2))


def ordering_term(table: PairCountTable, e1: str, e2: str) -> float:
    """log P(e1 -> e2) / P(e2 -> e1); the shared denominator cancels."""
    table._check(e1, e2)
    return math.log(smoothed_count(table, e1, e2) / smoothed_count(table, e2, e1))


def causal_potential(table: PairCountTable, e1: str, e2: str) -> float:
    p1, p2, joint, forward, backward = _probabilities(table, e1, e2)
    return math.log(joint / (p1 * p2)) + math.log(forward / backward)


def cpc(tables: Sequence[PairCountTable], e1: str, e2: str, w_max: int | None = None) -> float:
    """Sum over windows i = 1..w_max of CP_i / i."""
    by_window = {t.window: t for t in tables}
    w_max = w_max if w_max is not None else max(by_window, default=0)
    if w_max < 1:
        raise ValidationError("cpc needs at least one window table")
    missing = [w for w in range(1, w_max + 1) if w not in by_window]
    if missing:
        raise ValidationError(f"missing window tables: {missing}")
    return combine_windows([causal_potential(by_window[i], e1, e2) for i in range(1, w_max + 1)])


def combine_windows(cp_values: Sequence[float]) -> float:
    """CPC from per-window CP values given in window order 1, 2, ..."""
    return sum(cp / i for i, cp in enumerate(cp_values, 1))


def scp(table: PairCountTable, e1: str, e2: str) -> float:
    """P(e2 | e1) * P(e1 | e2) from the raw ordered count (no smoothing)."""
    n = table.count(e1, e2)
    return (n / table.unigram[e1]) * (n / table.unigram[e2])


@dataclass(frozen=True)
class ScoredPair:
    e1: str
    e2: str
    scope: str
    pmi_per_window: dict[int, float]
    cp_per_window: dict[int, float]
    cpc: float
    scp: float
    args1: ArgCombination = field(default_factory=ArgCombination)
    args2: ArgCombination = field(default_factory=ArgCombination)
    support: dict[int, int] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.e1, self.e2)

    @property
    def is_self_pair(self) -> bool:
        return self.e1 == self.e2


def rank_key(p: ScoredPair):
    return (-p.cpc, p.e1, p.e2)


def score_pair(tables: Sequence[PairCountTable], e1: str, e2: str,
               profiles: Mapping[str, ArgProfile] | None = None, scp_window: int = 1) -> ScoredPair:
    tables = sorted(tables, key=lambda t: t.window)
    pmis, cps, support = {}, {}, {}
    for t in tables:
        p1, p2, joint, forward, backward = _probabilities(t, e1, e2)
        pmis[t.window] = math.log(joint / (p1 * p2))
        cps[t.window] = pmis[t.window] + math.log(forward / backward)
        support[t.window] = t.ordered_pair.get((e1, e2), 0)
    by_window = {t.window: t for t in tables}
    profiles = profiles or {}
    return ScoredPair(
        e1, e2, tables[0].scope, pmis, cps,
        combine_windows([cps[w] for w in sorted(cps)]),
        scp(by_window[scp_window], e1, e2),
        profiles[e1].modal_combination if e1 in profiles else ArgCombination(),
        profiles[e2].modal_combination if e2 in profiles else ArgCombination(),
        support)


def score_scope(tables: Sequence[PairCountTable], arg_profiles: Mapping[str, ArgProfile] | None = None,
                min_support: int = 2) -> list[ScoredPair]:
    """Score every ordered pair seen at least ``min_support`` times at window 1.

    Returned sorted by descending CPC, ties broken by (e1, e2).
    """
    tables = sorted(tables, key=lambda t: t.window)
    if not tables:
        return []
    if [t.window for t in tables] != list(range(1, len(tables) + 1)):
        raise ValidationError("tables must cover windows 1..w_max without gaps")
    base = tables[0]
    out = [score_pair(tables, a, b, arg_profiles)
           for (a, b), n in base.ordered_pair.items() if n >= min_support]
    out.sort(key=rank_key)
    return out


# -- score files ------------------------------------------------------------

def score_columns(w_max: int) -> list[str]:
    ws = range(1, w_max + 1)
    return (["scope", "e1", "args1", "e2", "args2"]
            + [f"pmi_w{w}" for w in ws] + [f"cp_w{w}" for w in ws]
            + ["cpc", "scp"] + [f"support_w{w}" for w in ws])


def write_scores(scored: Mapping[str, Sequence[ScoredPair]], path, w_max: int) -> None:
    """TSV with a header row; scopes in name order, pairs in rank order."""
    ws = range(1, w_max + 1)
    lines = ["\t".join(score_columns(w_max))]
    for scope in sorted(scored):
        for p in scored[scope]:
            row = ([p.scope, p.e1, p.args1.encode(), p.e2, p.args2.encode()]
                   + [repr(p.pmi_per_window[w]) for w in ws]
                   + [repr(p.cp_per_window[w]) for w in ws]
                   + [repr(p.cpc), repr(p.scp)]
                   + [str(p.support[w]) for w in ws])
            lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scores(path) -> dict[str, list[ScoredPair]]:
    out: dict[str, list[ScoredPair]] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\r\n").split("\t")
        if header[:5] != ["scope", "e1", "args1", "e2", "args2"]:
            raise ParseError(path, 1, "not a score file")
        w_max = (len(header) - 7) // 3
        if w_max < 1 or header != score_columns(w_max):
            raise ParseError(path, 1, "unexpected score columns")
        ws = list(range(1, w_max + 1))
        for lineno, line in enumerate(f, 2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            c = line.split("\t")
            if len(c) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} columns, got {len(c)}")
            try:
                nums = c[5:]
                pair = ScoredPair(
                    c[1], c[3], c[0],
                    {w: float(nums[i]) for i, w in enumerate(ws)},
                    {w: float(nums[w_max + i]) for i, w in enumerate(ws)},
                    float(nums[2 * w_max]), float(nums[2 * w_max + 1]),
                    ArgCombination.decode(c[2]), ArgCombination.decode(c[4]),
                    {w: int(nums[2 * w_max + 2 + i]) for i, w in enumerate(ws)})
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            out.setdefault(pair.scope, []).append(pair)
    return out
