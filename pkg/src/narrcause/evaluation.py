"""Human-judgment items and agreement scoring."""

from __future__ import annotations

import csv
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, ValidationError
from .events import NONE, PERSON, SOMETHING

log = logging.getLogger(__name__)

HIGH_VS_LOW = "high_vs_low"
CPC_VS_EXTERNAL = "cpc_vs_external"
CAUSALITY_TYPE = "causality_type"
KINDS = (HIGH_VS_LOW, CPC_VS_EXTERNAL, CAUSALITY_TYPE)

CHOICE_LABELS = ("A", "B")
CAUSALITY_TYPES = ("physical", "motivational", "psychological", "enabling")
DEFAULT_PANEL = 5

_SLOT_TEXT = {PERSON: "[person]", SOMETHING: "[smth]"}


@dataclass(frozen=True)
class JudgmentItem:
    item_id: str
    kind: str
    option_a: str
    option_b: str = ""
    hidden_key: str | None = None
    pair: tuple[str, str] | None = None


@dataclass
class AgreementReport:
    kind: str
    n_items: int
    n_scored: int
    majority_rate: float
    unanimity_rate: float
    alpha_pairwise_mean: float
    alpha_pooled: float | None = None
    type_distribution: dict[str, int] = field(default_factory=dict)
    undecided: int = 0
    excluded: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "n_items": self.n_items, "n_scored": self.n_scored,
            "majority_rate": self.majority_rate, "unanimity_rate": self.unanimity_rate,
            "alpha_pairwise_mean": self.alpha_pairwise_mean, "alpha_pooled": self.alpha_pooled,
            "type_distribution": self.type_distribution, "undecided": self.undecided,
            "excluded": self.excluded,
        }


def render_event(lemma: str, args) -> str:
    parts = []
    if args.subj != NONE:
        parts.append(_SLOT_TEXT[args.subj])
    parts.append(lemma)
    if args.particle:
        parts.append(args.particle)
    for slot in (args.iobj, args.dobj):
        if slot != NONE:
            parts.append(_SLOT_TEXT[slot])
    return " ".join(parts)


def render_pair(pair) -> str:
    """Worker-facing text, e.g. ``[person] bend - [person] pick up [smth]``."""
    return f"{render_event(pair.e1, pair.args1)} - {render_event(pair.e2, pair.args2)}"


def _choice_item(item_id, kind, target, foil, rng) -> JudgmentItem:
    if rng.random() < 0.5:
        return JudgmentItem(item_id, kind, render_pair(target), render_pair(foil), "A")
    return JudgmentItem(item_id, kind, render_pair(foil), render_pair(target), "B")


def build_high_vs_low_items(high: Sequence, low: Sequence, seed: int,
                            prefix: str = "hl") -> list[JudgmentItem]:
    """Pair every high pair with a distinct low pair drawn at random."""
    if len(low) < len(high):
        raise ValidationError(f"need at least {len(high)} low pairs, got {len(low)}")
    rng = random.Random(seed)
    foils = rng.sample(list(low), len(high))
    return [_choice_item(f"{prefix}-{i:05d}", HIGH_VS_LOW, h, f, rng)
            for i, (h, f) in enumerate(zip(high, foils), 1)]


def build_comparison_items(cpc_pairs: Sequence, external_pairs: Sequence, seed: int,
                           n: int | None = None, prefix: str = "cx") -> list[JudgmentItem]:
    """Sample CPC pairs with distinct first events and match each to an external pair.

    The external pair for a first event is the first one listed with that
    lemma. Sampled pairs without a match are logged and skipped.
    """
    by_first: dict[str, list] = {}
    for p in cpc_pairs:
        by_first.setdefault(p.e1, []).append(p)
    firsts = list(by_first)
    if n is None:
        n = len(firsts)
    if n > len(firsts):
        raise ValidationError(
            f"cannot sample {n} pairs with distinct first events; at most {len(firsts)} available")
    external: dict[str, object] = {}
    for p in external_pairs:
        external.setdefault(p.e1, p)
    rng = random.Random(seed)
    items, unmatched = [], []
    for lemma in rng.sample(firsts, n):
        pair = rng.choice(by_first[lemma])
        if lemma not in external:
            unmatched.append(f"{pair.e1}-{pair.e2}")
            continue
        items.append(_choice_item(f"{prefix}-{len(items) + 1:05d}", CPC_VS_EXTERNAL,
                                  pair, external[lemma], rng))
    if unmatched:
        log.warning("skipped %d pairs with no external match: %s", len(unmatched), ", ".join(unmatched))
    return items


def build_type_items(pairs: Sequence, seed: int, n: int | None = None,
                     prefix: str = "ty") -> list[JudgmentItem]:
    if n is None:
        n = len(pairs)
    if n > len(pairs):
        raise ValidationError(f"cannot sample {n} type items from {len(pairs)} pairs")
    rng = random.Random(seed)
    chosen = rng.sample(list(pairs), n)
    return [JudgmentItem(f"{prefix}-{i:05d}", CAUSALITY_TYPE, render_pair(p), pair=(p.e1, p.e2))
            for i, p in enumerate(chosen, 1)]


# -- agreement -------------------------------------------------------------

def nominal_alpha(units: Iterable[Sequence[str]]) -> float:
    """Krippendorff's alpha for nominal labels.

    ``units`` holds, per item, the labels it received. Items with fewer than
    two labels are not pairable and are ignored. With no variation at all
    (a single label value overall) agreement is perfect and 1.0 is returned.
    """
    coincidence: Counter = Counter()
    for labels in units:
        m = len(labels)
        if m < 2:
            continue
        counts = Counter(labels)
        for c in counts:
            for k in counts:
                pairs = counts[c] * (counts[k] - (c == k))
                if pairs:
                    coincidence[c, k] += pairs / (m - 1)
    totals: Counter = Counter()
    for (c, _), v in coincidence.items():
        totals[c] += v
    n = sum(totals.values())
    if n == 0:
        raise ValidationError("no pairable values")
    observed = sum(v for (c, k), v in coincidence.items() if c != k)
    expected = sum(totals[c] * totals[k] for c in totals for k in totals if c != k) / (n - 1)
    if expected == 0:
        return 1.0
    return 1.0 - observed / expected


def pairwise_alpha(responses: Mapping[str, Mapping[str, str]], label_domain=None) -> float:
    """Mean nominal alpha over every pair of annotators.

    ``responses`` maps item -> annotator -> label. Annotator pairs with no
    co-labeled items are left out of the mean.
    """
    if label_domain is not None:
        _check_labels(responses, label_domain)
    annotators = sorted({a for labels in responses.values() for a in labels})
    if len(annotators) < 2:
        raise ValidationError("pairwise alpha needs at least two annotators")
    values = []
    for a, b in combinations(annotators, 2):
        units = [(labels[a], labels[b]) for labels in responses.values() if a in labels and b in labels]
        if units:
            values.append(nominal_alpha(units))
    if not values:
        raise ValidationError("no annotator pair labeled a common item")
    return sum(values) / len(values)


def pooled_alpha(responses: Mapping[str, Mapping[str, str]]) -> float:
    return nominal_alpha(list(labels.values()) for labels in responses.values())


def _check_labels(responses, domain):
    for item_id, labels in responses.items():
        for annotator, label in labels.items():
            if label not in domain:
                raise ValidationError(f"item {item_id}: label {label!r} from {annotator} not in {sorted(domain)}")


def _complete(items, responses, panel_size):
    ids = {it.item_id for it in items}
    unknown = sorted(set(responses) - ids)
    if unknown:
        raise ValidationError(f"responses reference unknown items: {unknown[:5]}")
    scored, excluded = {}, []
    for it in items:
        labels = responses.get(it.item_id, {})
        if len(labels) == panel_size:
            scored[it.item_id] = labels
        else:
            excluded.append(it.item_id)
    if excluded:
        log.warning("%d items without exactly %d labels excluded", len(excluded), panel_size)
    if not scored:
        raise ValidationError("no item has a complete panel of labels")
    return scored, excluded


def score_choice_items(items: Sequence[JudgmentItem], responses: Mapping[str, Mapping[str, str]],
                       panel_size: int = DEFAULT_PANEL) -> AgreementReport:
    """Majority (> half the panel) and unanimity rates for the hidden-key option."""
    items = [it for it in items if it.kind != CAUSALITY_TYPE]
    for it in items:
        if it.hidden_key not in CHOICE_LABELS:
            raise ValidationError(f"item {it.item_id} has no answer key")
    _check_labels(responses, CHOICE_LABELS)
    scored, excluded = _complete(items, responses, panel_size)
    keys = {it.item_id: it.hidden_key for it in items}
    majority = unanimous = 0
    for item_id, labels in scored.items():
        hits = sum(1 for v in labels.values() if v == keys[item_id])
        majority += 2 * hits > panel_size
        unanimous += hits == panel_size
    return AgreementReport(
        items[0].kind if items else HIGH_VS_LOW, len(items), len(scored),
        majority / len(scored), unanimous / len(scored),
        pairwise_alpha(scored), pooled_alpha(scored), excluded=excluded)


def score_type_items(items: Sequence[JudgmentItem], responses: Mapping[str, Mapping[str, str]],
                     panel_size: int = DEFAULT_PANEL) -> AgreementReport:
    """Majority vote over the four causality types; undecided items are counted apart."""
    items = [it for it in items if it.kind == CAUSALITY_TYPE]
    _check_labels(responses, CAUSALITY_TYPES)
    scored, excluded = _complete(items, responses, panel_size)
    distribution = {t: 0 for t in CAUSALITY_TYPES}
    decided = unanimous = 0
    for labels in scored.values():
        label, top = Counter(labels.values()).most_common(1)[0]
        if 2 * top > panel_size:
            decided += 1
            distribution[label] += 1
        unanimous += top == panel_size
    return AgreementReport(
        CAUSALITY_TYPE, len(items), len(scored), decided / len(scored), unanimous / len(scored),
        pairwise_alpha(scored), pooled_alpha(scored), distribution,
        undecided=len(scored) - decided, excluded=excluded)


def score_items(items, responses, panel_size=DEFAULT_PANEL) -> AgreementReport:
    if items and all(it.kind == CAUSALITY_TYPE for it in items):
        return score_type_items(items, responses, panel_size)
    return score_choice_items(items, responses, panel_size)


# -- files -------------------------------------------------------------------

def write_items(items: Sequence[JudgmentItem], items_path, key_path=None) -> None:
    """Worker-facing item CSV; the answer key goes to a separate file."""
    with open(items_path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["item_id", "kind", "option_a", "option_b"])
        for it in items:
            w.writerow([it.item_id, it.kind, it.option_a, it.option_b])
    if key_path is not None:
        with open(key_path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["item_id", "key"])
            for it in items:
                if it.hidden_key is not None:
                    w.writerow([it.item_id, it.hidden_key])


def _read_csv(path, header):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        first = next(reader, None)
        if first != list(header):
            raise ParseError(path, 1, f"header must be {','.join(header)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, row


def read_items(items_path, key_path=None) -> list[JudgmentItem]:
    keys = {}
    if key_path is not None:
        for lineno, (item_id, key) in _read_csv(key_path, ("item_id", "key")):
            if key not in CHOICE_LABELS:
                raise ParseError(key_path, lineno, f"key must be A or B, got {key!r}")
            keys[item_id] = key
    items = []
    for lineno, (item_id, kind, a, b) in _read_csv(items_path, ("item_id", "kind", "option_a", "option_b")):
        if kind not in KINDS:
            raise ParseError(items_path, lineno, f"unknown item kind {kind!r}")
        items.append(JudgmentItem(item_id, kind, a, b, keys.get(item_id)))
    return items


def read_responses(path) -> dict[str, dict[str, str]]:
    responses: dict[str, dict[str, str]] = {}
    for lineno, (item_id, annotator, label) in _read_csv(path, ("item_id", "annotator_id", "label")):
        labels = responses.setdefault(item_id, {})
        if annotator in labels:
            raise ParseError(path, lineno, f"annotator {annotator} labeled {item_id} twice")
        labels[annotator] = label.strip()
    return responses


def write_report(report: AgreementReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
