import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrcause.corpus import (ALL_SCOPE, AnnotatedToken, CorpusStore, FilmCatalog, FilmEntry,
                              SceneDocument, build_scopes, format_annotation, ingest,
                              load_catalog, parse_annotation_file, write_annotation_file)
from narrcause.errors import ParseError, ValidationError


def write(tmp_path, text, name="film.conll"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


HE_FELL = "1\tHe\the\tPRP\t2\tnsubj\tO\n2\tfell\tfall\tVBD\t0\troot\tO\n3\t.\t.\t.\t2\tpunct\tO\n"


def test_minimal_file(tmp_path):
    docs = parse_annotation_file(write(tmp_path, HE_FELL))
    assert len(docs) == 1
    assert len(docs[0].sentences) == 1
    assert [t.lemma for t in docs[0].sentences[0]] == ["he", "fall", "."]
    assert docs[0].film_id == "film" and docs[0].scene_ordinal == 0


def test_empty_file(tmp_path):
    assert parse_annotation_file(write(tmp_path, "")) == []


def test_wrong_column_count_names_line(tmp_path):
    p = write(tmp_path, HE_FELL + "\n4\tbad\n")
    with pytest.raises(ParseError) as err:
        parse_annotation_file(p)
    assert err.value.lineno == 5
    assert "film.conll:5" in str(err.value)


@pytest.mark.parametrize("row", [
    "x\tHe\the\tPRP\t2\tnsubj\tO",
    "1\tHe\the\tPRP\ttwo\tnsubj\tO",
    "1\tHe\the\tPRP\t1\tnsubj\tO",
    "0\tHe\the\tPRP\t2\tnsubj\tO",
    "1\tHe\the\t\t2\tnsubj\tO",
])
def test_bad_token_fields(tmp_path, row):
    with pytest.raises(ParseError):
        parse_annotation_file(write(tmp_path, row + "\n2\tfell\tfall\tVBD\t0\troot\tO\n"))


def test_head_outside_sentence(tmp_path):
    with pytest.raises(ParseError):
        parse_annotation_file(write(tmp_path, "1\tHe\the\tPRP\t5\tnsubj\tO\n"))


def test_scene_headers_split_documents(tmp_path):
    text = "# scene lotr_1\t1\n" + HE_FELL + "\n" + HE_FELL + "\n# scene lotr_1\t2\n# a comment\n" + HE_FELL
    docs = parse_annotation_file(write(tmp_path, text))
    assert [(d.film_id, d.scene_ordinal, len(d.sentences)) for d in docs] == [
        ("lotr_1", 1, 2), ("lotr_1", 2, 1)]


def test_token_count_equals_data_lines(phenomena_path):
    docs = parse_annotation_file(phenomena_path)
    lines = [ln for ln in phenomena_path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    assert sum(d.n_tokens for d in docs) == len(lines)
    assert len(docs[0].sentences) == 10


def test_round_trip(phenomena_path, tmp_path):
    docs = parse_annotation_file(phenomena_path)
    out = tmp_path / "rt.conll"
    write_annotation_file(docs, out)
    assert parse_annotation_file(out) == docs


_text = st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp"),
                                       blacklist_characters="\t\n\r#"), min_size=1, max_size=6)


@st.composite
def documents(draw):
    docs = []
    for ordinal in range(draw(st.integers(1, 3))):
        sentences = []
        for _ in range(draw(st.integers(1, 3))):
            n = draw(st.integers(1, 5))
            toks = []
            for i in range(1, n + 1):
                head = draw(st.sampled_from([h for h in range(0, n + 1) if h != i]))
                toks.append(AnnotatedToken(i, draw(_text), draw(_text), draw(_text).strip() or "NN",
                                           head, draw(_text), draw(st.sampled_from(["O", "PERSON"]))))
            sentences.append(tuple(toks))
        docs.append(SceneDocument(draw(_text.filter(lambda s: s.strip() == s and s)), ordinal, tuple(sentences)))
    return docs


@settings(max_examples=50, deadline=None)
@given(documents())
def test_round_trip_property(tmp_path_factory, docs):
    path = tmp_path_factory.mktemp("rt") / "x.conll"
    path.write_text(format_annotation(docs), encoding="utf-8")
    assert parse_annotation_file(path) == docs


CATALOG = ("film_id,title,genres,word_count\n"
           "lotr_1,The Fellowship of the Ring,Action|Adventure|Fantasy,21000\n")


def test_catalog_entry_with_three_genres(tmp_path):
    cat = load_catalog(write(tmp_path, CATALOG, "catalog.csv"))
    assert len(cat) == 1
    entry = cat.entries[0]
    assert entry.genres == {"Action", "Adventure", "Fantasy"}
    assert entry.word_count == 21000


def test_catalog_spaces_after_commas(tmp_path):
    text = "film_id,title,genres,word_count\nlotr_1, The Fellowship of the Ring, Action|Adventure|Fantasy, 21000\n"
    assert load_catalog(write(tmp_path, text, "catalog.csv")).entries[0].title == "The Fellowship of the Ring"


def test_catalog_duplicate_film(tmp_path):
    text = CATALOG + "lotr_1,Again,Drama,5\n"
    with pytest.raises(ValidationError):
        load_catalog(write(tmp_path, text, "catalog.csv"))


def test_catalog_film_without_genre(tmp_path):
    text = "film_id,title,genres,word_count\nx,X,,5\n"
    with pytest.raises(ValidationError):
        load_catalog(write(tmp_path, text, "catalog.csv"))


def test_catalog_two_films_share_genre(tmp_path):
    text = CATALOG + "hobbit,The Hobbit,Fantasy,18000\n"
    scopes = {s.name: s for s in build_scopes(load_catalog(write(tmp_path, text, "catalog.csv")))}
    assert scopes["Fantasy"].film_ids == {"lotr_1", "hobbit"}


def _catalog(film_genres):
    return FilmCatalog(tuple(FilmEntry(f, f, frozenset(g)) for f, g in film_genres.items()))


def test_scopes_three_films_two_genres():
    cat = _catalog({"a": {"Action"}, "b": {"Comedy"}, "c": {"Action", "Comedy"}})
    scopes = build_scopes(cat)
    assert [s.name for s in scopes] == ["Action", "Comedy", ALL_SCOPE]
    by_name = {s.name: s.film_ids for s in scopes}
    assert "c" in by_name["Action"] and "c" in by_name["Comedy"]
    assert by_name[ALL_SCOPE] == {"a", "b", "c"}


def test_single_film_scope_equals_all():
    scopes = build_scopes(_catalog({"a": {"Horror"}}))
    assert scopes[0].film_ids == scopes[-1].film_ids == {"a"}


def test_empty_catalog_rejected():
    with pytest.raises(ValidationError):
        build_scopes(FilmCatalog(()))


@given(st.dictionaries(st.sampled_from("abcdefgh"),
                       st.sets(st.sampled_from(["Action", "Drama", "Horror"]), min_size=1), min_size=1))
def test_scope_sizes_property(film_genres):
    scopes = build_scopes(_catalog(film_genres))
    genre_total = sum(len(s.film_ids) for s in scopes if s.name != ALL_SCOPE)
    all_size = len(scopes[-1].film_ids)
    assert all_size == len(film_genres)
    assert genre_total >= all_size
    assert (genre_total == all_size) == all(len(g) == 1 for g in film_genres.values())


def test_ingest_and_store_round_trip(tmp_path, phenomena_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "lotr.conll").write_text(phenomena_path.read_text())
    catalog = write(tmp_path, CATALOG, "catalog.csv")
    store = ingest(corpus, catalog)
    assert len(store.documents) == 1
    store.save(tmp_path / "store.json")
    again = CorpusStore.load(tmp_path / "store.json")
    assert again.documents == store.documents
    assert again.catalog == store.catalog


def test_ingest_rejects_unknown_film(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "x.conll").write_text("# scene nobody\t0\n" + HE_FELL)
    with pytest.raises(ValidationError):
        ingest(corpus, write(tmp_path, CATALOG, "catalog.csv"))
