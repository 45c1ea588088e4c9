"""Stage functions and the end-to-end run with a content-addressed manifest."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import shutil
import time
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock, Timeout

from . import counting, corpus, evaluation, events, ranking, scoring
from .corpus import ALL_SCOPE
from .errors import NarrCauseError, ValidationError

log = logging.getLogger(__name__)

STAGES = ("ingest", "extract", "count", "score", "rank", "eval-gen")
MANIFEST = "manifest.json"


class StageError(NarrCauseError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    corpus_dir: Path
    catalog: Path
    light_verbs: Path
    person_lexicon: Path
    output_dir: Path
    seed: int
    w_max: int = 3
    min_support: int = 2
    high_total: int = 3000
    low_total: int = 6000
    window_mode: str = counting.CUMULATIVE
    overlap_k: int = 30
    type_items: int = 100
    comparison_items: int = 100
    external_pairs: Path | None = None

    PATH_FIELDS = ("corpus_dir", "catalog", "light_verbs", "person_lexicon", "output_dir", "external_pairs")

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        """Load a JSON config; relative paths resolve against the config's directory."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data, base=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base=Path(".")) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in data:
            raise ValidationError("config must set a seed")
        missing = [f.name for f in dataclasses.fields(cls)
                   if f.default is dataclasses.MISSING and f.name not in data]
        if missing:
            raise ValidationError(f"config is missing {missing}")
        values = dict(data)
        for key in cls.PATH_FIELDS:
            if values.get(key) is not None:
                p = Path(values[key])
                values[key] = p if p.is_absolute() else Path(base) / p
        for key in ("seed", "w_max", "min_support", "high_total", "low_total",
                    "overlap_k", "type_items", "comparison_items"):
            if key in values:
                try:
                    values[key] = int(values[key])
                except (TypeError, ValueError):
                    raise ValidationError(f"config {key} must be an integer") from None
        return cls(**values)

    def validate(self) -> None:
        for key in ("corpus_dir", "catalog", "light_verbs", "person_lexicon", "external_pairs"):
            p = getattr(self, key)
            if p is not None and not Path(p).exists():
                raise ValidationError(f"{key} not found: {p}")
        if self.w_max < 1:
            raise ValidationError("w_max must be >= 1")
        if self.high_total <= 0 or self.low_total <= 0:
            raise ValidationError("high_total and low_total must be positive")
        if self.min_support < 1:
            raise ValidationError("min_support must be >= 1")
        if self.window_mode not in (counting.CUMULATIVE, counting.EXACT):
            raise ValidationError(f"unknown window_mode {self.window_mode!r}")

    def settings(self) -> dict:
        """Non-path settings; these feed stage keys and the manifest."""
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
                if f.name not in self.PATH_FIELDS}


# -- digests -------------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def tree_digests(path, root=None) -> dict[str, str]:
    """sha256 per file, keyed by path relative to ``root``."""
    path = Path(path)
    root = Path(root) if root is not None else path.parent
    if path.is_file():
        return {path.relative_to(root).as_posix(): file_digest(path)}
    return {p.relative_to(root).as_posix(): file_digest(p)
            for p in sorted(path.rglob("*")) if p.is_file()}


def _combined(digests: dict) -> str:
    return hashlib.sha256(json.dumps(digests, sort_keys=True).encode()).hexdigest()


# -- stages ----------------------------------------------------------------

def stage_ingest(corpus_dir, catalog_path, out_store) -> corpus.CorpusStore:
    store = corpus.ingest(corpus_dir, catalog_path)
    store.save(out_store)
    return store


def stage_extract(store_path, light_verbs_path, lexicon_path, out_events) -> list[events.EventInstance]:
    store = corpus.CorpusStore.load(store_path)
    config = events.ExtractionConfig(events.load_light_verbs(light_verbs_path),
                                     events.PersonLexicon.load(lexicon_path))
    evs = events.extract_corpus(store.documents, config)
    events.write_events(evs, out_events)
    return evs


def load_any_catalog(path) -> corpus.FilmCatalog:
    """A catalog CSV, or the catalog embedded in an ingest store."""
    path = Path(path)
    if path.suffix == ".json":
        return corpus.CorpusStore.load(path).catalog
    return corpus.load_catalog(path)


def stage_count(events_path, catalog_path, w_max, out_dir, mode=counting.CUMULATIVE):
    evs = events.read_events(events_path)
    catalog = load_any_catalog(catalog_path)
    tables, profiles = {}, {}
    for scope in corpus.build_scopes(catalog):
        scope_events = [e for e in evs if e.film_id in scope.film_ids]
        tables[scope.name] = counting.count_scope(
            counting.scene_streams(scope_events), w_max, scope.name, mode)
        profiles[scope.name] = events.build_arg_profiles(scope_events)
    out_dir = Path(out_dir)
    counting.write_tables(tables, out_dir)
    events.write_profiles(profiles, out_dir / "profiles.tsv")
    return tables, profiles


def stage_score(counts_dir, profiles_path, min_support, out_scores):
    tables = counting.read_tables(counts_dir)
    profiles = events.read_profiles(profiles_path) if profiles_path else {}
    if not tables:
        raise ValidationError(f"no count tables under {counts_dir}")
    w_max = min(len(t) for t in tables.values())
    scored = {scope: scoring.score_scope(ts[:w_max], profiles.get(scope, {}), min_support)
              for scope, ts in tables.items()}
    scoring.write_scores(scored, out_scores, w_max)
    return scored


def stage_rank(scores_path, catalog_path, high_total, low_total, out_dir,
               profiles_path=None, external_path=None, k=30):
    scored = scoring.read_scores(scores_path)
    catalog = load_any_catalog(catalog_path)
    profiles = events.read_profiles(profiles_path) if profiles_path else None
    sel = ranking.select_extremes(scored, catalog, ranking.SelectionConfig(high_total, low_total))
    high = ranking.dedup_merge(sel.high, profiles)
    low = ranking.dedup_merge(sel.low, profiles)
    for p in sel.shortfall.items():
        log.warning("selection shortfall in %s: %s", *p)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ranking.write_pair_file(high, out_dir / "high.tsv")
    ranking.write_pair_file(low, out_dir / "low.tsv")

    lists = ranking.genre_lists(scored)
    all_list = lists.get(ALL_SCOPE, [])
    whole = ranking.dedup_merge(all_list[:len(high)], profiles)
    ranking.write_pair_file(whole, out_dir / "all_top.tsv")
    matrix = ranking.overlap_matrix(lists, k)
    unique = {name: [f"{p.e1} - {p.e2}" for p in ranking.unique_to_scope(
                  lst, [o for n, o in lists.items() if n != name], k)]
              for name, lst in lists.items()}
    summary = {
        "high_quotas": sel.high_quotas, "low_quotas": sel.low_quotas,
        "shortfall": sel.shortfall,
        "n_high_selected": len(sel.high), "n_low_selected": len(sel.low),
        "n_high_merged": len(high), "n_low_merged": len(low),
        "high_sources": [[p.e1, p.e2, sorted(p.source_scopes)] for p in high],
        "low_sources": [[p.e1, p.e2, sorted(p.source_scopes)] for p in low],
    }
    overlaps = {
        "matrix": matrix.to_dict(),
        "unique_to_scope": unique,
        "genre_merged_vs_all": {"n": len(high), "overlap": ranking.overlap(high, whole, len(high))},
    }
    if external_path is not None:
        cmp = ranking.compare_external(high, external_path)
        overlaps["external"] = {"n_merged": cmp.n_merged, "n_external": cmp.n_external,
                                "overlap": cmp.count, "matches": [list(m) for m in cmp.matches]}
    _write_json(out_dir / "selection.json", summary)
    _write_json(out_dir / "overlap.json", overlaps)
    return high, low


def stage_eval_gen(mode, seed, out_items, out_key, high_path=None, low_path=None,
                   external_path=None, n=None):
    if mode == "high-low":
        items = evaluation.build_high_vs_low_items(
            ranking.read_pair_file(high_path), ranking.read_pair_file(low_path), seed)
    elif mode == "comparison":
        items = evaluation.build_comparison_items(
            ranking.read_pair_file(high_path), ranking.read_pair_file(external_path), seed, n)
    elif mode == "type":
        high = ranking.read_pair_file(high_path)
        items = evaluation.build_type_items(high, seed, None if n is None else min(n, len(high)))
    else:
        raise ValidationError(f"unknown eval mode {mode!r}")
    evaluation.write_items(items, out_items, out_key)
    return items


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- run -----------------------------------------------------------------------

def _stage_plan(cfg: PipelineConfig):
    """(name, input paths, settings, output paths, action) per stage."""
    out = cfg.output_dir
    store, evs, counts = out / "store.json", out / "events.tsv", out / "counts"
    scores, rank_dir, eval_dir = out / "scores.tsv", out / "rank", out / "eval"
    profiles = counts / "profiles.tsv"
    external = [cfg.external_pairs] if cfg.external_pairs else []

    def eval_gen():
        eval_dir.mkdir(parents=True, exist_ok=True)
        high, low = rank_dir / "high.tsv", rank_dir / "low.tsv"
        stage_eval_gen("high-low", cfg.seed, eval_dir / "high_low_items.csv",
                       eval_dir / "high_low_key.csv", high, low)
        stage_eval_gen("type", cfg.seed + 1, eval_dir / "type_items.csv", None,
                       high, n=cfg.type_items)
        if cfg.external_pairs:
            n_first = len({p.e1 for p in ranking.read_pair_file(high)})
            stage_eval_gen("comparison", cfg.seed + 2, eval_dir / "comparison_items.csv",
                           eval_dir / "comparison_key.csv", high, external_path=cfg.external_pairs,
                           n=min(cfg.comparison_items, n_first))

    return [
        ("ingest", [cfg.corpus_dir, cfg.catalog], {}, [store],
         lambda: stage_ingest(cfg.corpus_dir, cfg.catalog, store)),
        ("extract", [store, cfg.light_verbs, cfg.person_lexicon], {}, [evs],
         lambda: stage_extract(store, cfg.light_verbs, cfg.person_lexicon, evs)),
        ("count", [evs, store], {"w_max": cfg.w_max, "window_mode": cfg.window_mode}, [counts],
         lambda: stage_count(evs, store, cfg.w_max, counts, cfg.window_mode)),
        ("score", [counts], {"min_support": cfg.min_support}, [scores],
         lambda: stage_score(counts, profiles, cfg.min_support, scores)),
        ("rank", [scores, store, profiles] + external,
         {"high_total": cfg.high_total, "low_total": cfg.low_total, "overlap_k": cfg.overlap_k},
         [rank_dir],
         lambda: stage_rank(scores, store, cfg.high_total, cfg.low_total, rank_dir,
                            profiles, cfg.external_pairs, cfg.overlap_k)),
        ("eval-gen", [rank_dir / "high.tsv", rank_dir / "low.tsv"] + external,
         {"seed": cfg.seed, "type_items": cfg.type_items, "comparison_items": cfg.comparison_items},
         [eval_dir], eval_gen),
    ]


def _digest_inputs(paths, out_dir) -> dict[str, str]:
    digests = {}
    for p in paths:
        p = Path(p)
        try:
            rel_root = out_dir if p.resolve().is_relative_to(out_dir.resolve()) else p.parent
        except OSError:
            rel_root = p.parent
        for name, d in tree_digests(p, rel_root).items():
            digests[name] = d
    return digests


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage in order and write ``manifest.json`` into the output directory.

    A stage whose inputs and settings hash to the key recorded by the previous
    run, and whose outputs are still intact, is skipped.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out / ".lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise NarrCauseError(f"output directory {out} is locked by another run") from None
    try:
        return _run_locked(cfg, out)
    finally:
        lock.release()


def _run_locked(cfg: PipelineConfig, out: Path) -> dict:
    previous = {}
    manifest_path = out / MANIFEST
    if manifest_path.exists():
        try:
            previous = {s["name"]: s for s in json.loads(manifest_path.read_text())["stages"]}
        except (ValueError, KeyError, TypeError):
            previous = {}
    manifest = {
        "settings": cfg.settings(),
        "inputs": _digest_inputs([p for p in (cfg.corpus_dir, cfg.catalog, cfg.light_verbs,
                                              cfg.person_lexicon, cfg.external_pairs) if p], out),
        "stages": [],
        "complete": False,
    }
    plan = _stage_plan(cfg)
    failure = None
    for i, (name, inputs, settings, outputs, action) in enumerate(plan):
        entry = {"name": name}
        key = _combined({"stage": name, "settings": settings,
                         "inputs": _digest_inputs(inputs, out)})
        entry["key"] = key
        old = previous.get(name)
        start = time.perf_counter()
        if old and old.get("status") == "completed" and old.get("key") == key \
                and all(Path(out, rel).is_file() and file_digest(Path(out, rel)) == d
                        for rel, d in old.get("outputs", {}).items()):
            entry.update(status="completed", cached=True, outputs=old["outputs"])
        else:
            for p in outputs:
                if Path(p).is_dir():
                    shutil.rmtree(p)
            try:
                action()
            except Exception as exc:  # noqa: BLE001 - any failure aborts the run
                failure = StageError(name, exc)
                entry.update(status="failed", error=str(exc))
            else:
                outs = {}
                for p in outputs:
                    outs.update(tree_digests(p, out))
                entry.update(status="completed", cached=False, outputs=outs)
        entry["seconds"] = round(time.perf_counter() - start, 6)
        manifest["stages"].append(entry)
        if failure:
            stale = [n for n, *_ in plan[i:]]
            for n in stale[1:]:
                manifest["stages"].append({"name": n, "status": "not_run"})
            manifest["stale"] = stale
            break
    else:
        manifest["complete"] = True
    manifest["output_digest"] = _combined(
        {s["name"]: s.get("outputs", {}) for s in manifest["stages"]})
    _write_json(manifest_path, manifest)
    if failure:
        raise failure
    return manifest


# -- report ----------------------------------------------------------------

def load_manifest(output_dir) -> dict:
    path = Path(output_dir) / MANIFEST
    if not path.exists():
        raise ValidationError(f"no manifest in {output_dir}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if not manifest.get("complete"):
        raise ValidationError(f"run in {output_dir} did not complete")
    return manifest


def build_report(output_dir, k: int = 7) -> dict:
    """Genre size table, top-k pairs per scope, overlap matrix and eval summaries."""
    out = Path(output_dir)
    manifest = load_manifest(out)
    store = corpus.CorpusStore.load(out / "store.json")
    catalog = store.catalog
    scored = scoring.read_scores(out / "scores.tsv")
    tables = counting.read_tables(out / "counts")
    films, words = catalog.films_per_genre(), catalog.words_per_genre()
    scenes_per_film: dict[str, int] = {}
    for d in store.documents:
        scenes_per_film[d.film_id] = scenes_per_film.get(d.film_id, 0) + 1
    rows = []
    for scope in corpus.build_scopes(catalog):
        t = tables.get(scope.name, [])
        rows.append({
            "scope": scope.name,
            "films": len(scope.film_ids) if scope.is_all else films[scope.name],
            "words": sum(e.word_count for e in catalog) if scope.is_all else words[scope.name],
            "scenes": sum(scenes_per_film.get(f, 0) for f in scope.film_ids),
            "events": t[0].total_events if t else 0,
            "scored_pairs": len(scored.get(scope.name, [])),
        })
    lists = ranking.genre_lists(scored)
    top = {scope: [{"e1": p.e1, "e2": p.e2, "cpc": p.cpc,
                    "text": evaluation.render_pair(p)} for p in lst[:k]]
           for scope, lst in lists.items()}
    overlap = json.loads((out / "rank" / "overlap.json").read_text(encoding="utf-8"))
    selection = json.loads((out / "rank" / "selection.json").read_text(encoding="utf-8"))
    evals = {}
    for items_file in sorted((out / "eval").glob("*_items.csv")):
        items = evaluation.read_items(items_file)
        evals[items_file.stem] = {"n_items": len(items)}
    for report_file in sorted((out / "eval").glob("*.report.json")):
        evals[report_file.stem] = json.loads(report_file.read_text(encoding="utf-8"))
    return {"genres": rows, "top_pairs": top, "overlap": overlap,
            "selection": {k_: selection[k_] for k_ in
                          ("high_quotas", "low_quotas", "shortfall", "n_high_merged", "n_low_merged")},
            "eval": evals, "output_digest": manifest["output_digest"]}


def format_report(rep: dict) -> str:
    lines = ["Scopes", ""]
    lines.append(f"{'scope':<16}{'films':>7}{'words':>12}{'scenes':>8}{'events':>9}{'pairs':>8}")
    for r in rep["genres"]:
        lines.append(f"{r['scope']:<16}{r['films']:>7}{r['words']:>12,}{r['scenes']:>8}"
                     f"{r['events']:>9}{r['scored_pairs']:>8}")
    for scope, pairs in rep["top_pairs"].items():
        lines += ["", f"Highest CPC pairs: {scope}"]
        if not pairs:
            lines.append("  (none)")
        for p in pairs:
            lines.append(f"  {p['text']:<60}{p['cpc']:8.2f}")
    m = rep["overlap"]["matrix"]
    names = m["names"]
    lines += ["", f"Overlap among top {m['k']} pairs", ""]
    lines.append(" " * 10 + "".join(f"{n[:8]:>9}" for n in names))
    for a in names:
        lines.append(f"{a[:10]:<10}" + "".join(f"{m['matrix'][a][b]:>9}" for b in names))
    g = rep["overlap"]["genre_merged_vs_all"]
    lines += ["", f"Merged genre high pairs vs top {g['n']} of ALL: {g['overlap']} shared"]
    if "external" in rep["overlap"]:
        e = rep["overlap"]["external"]
        shared = ", ".join(f"{a} - {b}" for a, b in e["matches"]) or "none"
        lines.append(f"External list overlap: {e['overlap']} ({shared})")
    lines += ["", "Evaluation"]
    for name, info in rep["eval"].items():
        lines.append(f"  {name}: " + ", ".join(f"{k}={v}" for k, v in info.items()
                                                if not isinstance(v, (list, dict))))
    return "\n".join(lines) + "\n"
