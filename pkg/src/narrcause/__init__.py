"""Causal event pair mining from dependency-annotated film scene descriptions."""

from .corpus import (ALL_SCOPE, AnalysisScope, AnnotatedToken, FilmCatalog, SceneDocument,
                     build_scopes, load_catalog, parse_annotation_file)
from .counting import PairCountTable, count_scope, smoothed_count
from .errors import NarrCauseError, ParseError, ValidationError
from .events import (ArgCombination, ArgProfile, EventInstance, ExtractionConfig, PersonLexicon,
                     build_arg_profiles, extract_events, generalize_argument)
from .evaluation import (JudgmentItem, build_comparison_items, build_high_vs_low_items,
                         pairwise_alpha, score_choice_items, score_type_items)
from .ranking import (MergedPair, SelectionConfig, compare_external, dedup_merge, overlap,
                      select_extremes, unique_to_scope)
from .scoring import ScoredPair, causal_potential, cpc, pmi, score_scope, scp

__version__ = "0.1.0"
