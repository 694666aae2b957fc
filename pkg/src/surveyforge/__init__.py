"""surveyforge: structured multi-document summarization of paper abstracts.

Corpus construction, rhetorical sentence classification, category-based
alignment, graph-based extractive summarization, and the evaluation metrics
that go with them.
"""

from .align import AlignedPair, category_align, one_to_many_align
from .classify import (Category, ClassifierModel, CoarseCategory,
                       LabeledSentence, classify_abstract, classify_intro,
                       coarsen, featurize_scc, featurize_ssc, predict, train)
from .config import PipelineConfig, default_config_text, validate_config
from .corpus import (ReferenceDoc, SurveyExample, TargetSections,
                     build_target_sections, filter_example, ingest_raw,
                     load_corpus, save_corpus, split_dataset, truncate_body,
                     truncate_inputs)
from .metrics import (AgreementTable, CorpusStats, Fragment, RougeScore,
                      compression, corpus_stats, coverage, density,
                      evaluate_corpus, evaluate_structured,
                      extractive_fragments, fleiss_kappa, kde_export,
                      novel_ngrams, rouge_l, rouge_n)
from .pipeline import StageError, run_pipeline
from .summarize import (ConvergenceError, SentenceGraph, SummaryBudget,
                        lexrank, select, summarize_structured, textrank,
                        tfidf_cosine)
from .text import SentenceRecord, split_sentences, tokenize

__version__ = "0.1.0"
