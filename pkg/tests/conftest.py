import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).parent.parent / "src" / "narrcause" / "data"


def _token_rows(words):
    """Rows for a flat 'Subject verb object .' style sentence.

    ``words`` is a list of (surface, lemma, pos, head, deprel, ner).
    """
    return [f"{i}\t{s}\t{l}\t{p}\t{h}\t{d}\t{n}" for i, (s, l, p, h, d, n) in enumerate(words, 1)]


def simple_sentence(verb_surface, verb_lemma, subj="He", obj=None):
    words = [(subj, subj.lower(), "PRP", 2, "nsubj", "O"),
             (verb_surface, verb_lemma, "VBZ", 0, "root", "O")]
    if obj:
        words.append((obj, obj.lower(), "NN", 2, "dobj", "O"))
    words.append((".", ".", ".", 2, "punct", "O"))
    return _token_rows(words)


# film -> list of verbs in its single scene
PIPELINE_SCENES = {
    "f_action": [("grabs", "grab", "sleeve"), ("spills", "spill", "beer"),
                 ("pushes", "push", None), ("falls", "fall", None)],
    "f_both": [("pushes", "push", None), ("stumbles", "stumble", None),
               ("falls", "fall", None), ("grabs", "grab", "rope")],
    "f_comedy": [("laughs", "laugh", None), ("pushes", "push", None),
                 ("falls", "fall", None), ("cries", "cry", None)],
}


def write_pipeline_fixture(root: Path, external=False) -> Path:
    """A 3-film, 3-scene, 12-event corpus plus config; returns the config path."""
    corpus = root / "corpus"
    corpus.mkdir(parents=True)
    for film, verbs in PIPELINE_SCENES.items():
        lines = [f"# scene {film}\t1"]
        for surface, lemma, obj in verbs:
            lines += simple_sentence(surface, lemma, obj=obj)
            lines.append("")
        (corpus / f"{film}.conll").write_text("\n".join(lines), encoding="utf-8")
    (root / "catalog.csv").write_text(
        "film_id,title,genres,word_count\n"
        "f_action,Action Film,Action,1200\n"
        "f_both,Both Film,Action|Comedy,900\n"
        "f_comedy,Comedy Film,Comedy,800\n", encoding="utf-8")
    (root / "light_verbs.txt").write_text((DATA / "light_verbs.txt").read_text())
    (root / "person_lexicon.txt").write_text((DATA / "person_lexicon.txt").read_text())
    cfg = {
        "corpus_dir": "corpus", "catalog": "catalog.csv",
        "light_verbs": "light_verbs.txt", "person_lexicon": "person_lexicon.txt",
        "output_dir": "out", "seed": 7, "w_max": 3, "min_support": 1,
        "high_total": 2, "low_total": 4, "type_items": 2,
    }
    if external:
        (root / "external.tsv").write_text(
            "e1_subj\te1_lemma\te1_particle\te1_dobj\te1_iobj\te2_subj\te2_lemma\te2_particle\te2_dobj\te2_iobj\n"
            "person\tpush\tnone\tperson\tnone\tperson\tleave\tnone\tnone\tnone\n"
            "person\tgrab\tnone\tsomething\tnone\tperson\tspill\tnone\tsomething\tnone\n"
            "person\tstumble\tupon\tperson\tnone\tperson\ttake\tnone\tperson\tnone\n",
            encoding="utf-8")
        cfg["external_pairs"] = "external.tsv"
    path = root / "config.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path


@pytest.fixture
def pipeline_config(tmp_path):
    return write_pipeline_fixture(tmp_path)


@pytest.fixture
def phenomena_path():
    return FIXTURES / "phenomena.conll"


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
