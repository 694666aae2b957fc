"""Rhetorical sentence classification.

Sentences get one of five categories (background, objective, method, result,
other), later coarsened to three (background, method, other) for section
construction and alignment. The classifier is a smoothed generative
bag-of-features model behind a small contract: two feature regimes are
supported, context-window ("scc": the sentence plus its neighbors) and
sequence-aware ("ssc": context plus position-in-abstract features). External
labels carried in a corpus file can bypass the model entirely.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .text import SentenceRecord

if TYPE_CHECKING:  # pragma: no cover - annotation only
    from .corpus import ReferenceDoc


class Category(enum.Enum):
    """Five-way sentence category. Definition order is the tie-break order."""

    BACKGROUND = "background"
    OBJECTIVE = "objective"
    METHOD = "method"
    RESULT = "result"
    OTHER = "other"


class CoarseCategory(enum.Enum):
    """Three-way category used for summary sections and alignment."""

    BACKGROUND = "background"
    METHOD = "method"
    OTHER = "other"


CATEGORY_ORDER: tuple[Category, ...] = tuple(Category)
COARSE_ORDER: tuple[CoarseCategory, ...] = tuple(CoarseCategory)

_COARSEN = {
    Category.BACKGROUND: CoarseCategory.BACKGROUND,
    Category.OBJECTIVE: CoarseCategory.OTHER,
    Category.METHOD: CoarseCategory.METHOD,
    Category.RESULT: CoarseCategory.OTHER,
    Category.OTHER: CoarseCategory.OTHER,
}


def coarsen(category: Category) -> CoarseCategory:
    """Map the five-way category onto {background, method, other}.

    Objective and result content is folded into "other".
    """
    return _COARSEN[category]


@dataclass(frozen=True)
class LabeledSentence:
    sentence: SentenceRecord
    category: Category
    coarse: CoarseCategory
    confidence: float = 1.0

    @classmethod
    def make(cls, sentence: SentenceRecord, category: Category,
             confidence: float = 1.0) -> "LabeledSentence":
        return cls(sentence=sentence, category=category,
                   coarse=coarsen(category), confidence=confidence)


# A feature bag maps feature name to nonnegative weight. Word features come
# straight from the tokenizer; structural features use angle brackets, which
# the tokenizer can never emit as a whole token.
FeatureBag = dict[str, float]

CONTEXT_WEIGHT = 0.5
BOS_MARKER = "<bos>"
EOS_MARKER = "<eos>"
FIRST_FLAG = "<is-first>"
LAST_FLAG = "<is-last>"
_POSITION_NAMES = ("first", "early", "middle", "late", "last")


def _add(bag: FeatureBag, key: str, weight: float) -> None:
    bag[key] = bag.get(key, 0.0) + weight


def featurize_scc(target: SentenceRecord,
                  prev: SentenceRecord | None,
                  nxt: SentenceRecord | None) -> FeatureBag:
    """Context-window features: target tokens at weight 1, neighbor tokens at
    weight 0.5, and a boundary marker for each absent neighbor."""
    bag: FeatureBag = {}
    for tok in target.tokens:
        _add(bag, tok, 1.0)
    if prev is None:
        _add(bag, BOS_MARKER, 1.0)
    else:
        for tok in prev.tokens:
            _add(bag, tok, CONTEXT_WEIGHT)
    if nxt is None:
        _add(bag, EOS_MARKER, 1.0)
    else:
        for tok in nxt.tokens:
            _add(bag, tok, CONTEXT_WEIGHT)
    return bag


def featurize_ssc(abstract: Sequence[SentenceRecord]) -> list[FeatureBag]:
    """Sequence-aware features: one bag per sentence.

    Each bag is the context-window bag plus a quantized relative position
    (quintile of index/length) and absolute first/last flags.
    """
    n = len(abstract)
    if n == 0:
        raise ValueError("featurize_ssc: abstract must contain at least one sentence")
    bags: list[FeatureBag] = []
    for i, sentence in enumerate(abstract):
        prev = abstract[i - 1] if i > 0 else None
        nxt = abstract[i + 1] if i + 1 < n else None
        bag = featurize_scc(sentence, prev, nxt)
        quintile = 5 * i // n
        _add(bag, f"<pos:{_POSITION_NAMES[quintile]}>", 1.0)
        if i == 0:
            _add(bag, FIRST_FLAG, 1.0)
        if i == n - 1:
            _add(bag, LAST_FLAG, 1.0)
        bags.append(bag)
    return bags


@dataclass
class ClassifierModel:
    """Additively smoothed generative classifier over feature bags.

    ``counts[c][f]`` holds the summed feature weight of ``f`` in category
    ``c``'s training bags and ``totals[c]`` its sum over the vocabulary.
    The smoothed likelihood of a feature given a category is
    ``(count + a) / (total + a * |V|)``, which sums to one over the training
    vocabulary; features outside it receive the same smoothed floor.
    """

    mode: str  # "scc" or "ssc"
    smoothing: float
    priors: dict[Category, float]
    counts: dict[Category, dict[str, float]]
    totals: dict[Category, float]
    vocabulary: tuple[str, ...] = field(repr=False)

    def likelihood(self, feature: str, category: Category) -> float:
        if not self.vocabulary:
            return 1.0  # featureless model: evidence carries no information
        count = self.counts[category].get(feature, 0.0)
        denom = self.totals[category] + self.smoothing * len(self.vocabulary)
        return (count + self.smoothing) / denom


def train(labeled: Sequence[tuple[FeatureBag, Category]],
          smoothing: float = 1.0,
          mode: str = "ssc") -> ClassifierModel:
    """Fit priors and smoothed per-category feature weights.

    Counting commutes, so permuting the training examples yields an
    identical model.
    """
    if not labeled:
        raise ValueError("train: empty training set")
    if smoothing <= 0:
        raise ValueError("train: smoothing must be positive")
    if mode not in ("scc", "ssc"):
        raise ValueError(f"train: unknown feature mode {mode!r}")
    counts: dict[Category, dict[str, float]] = {c: {} for c in CATEGORY_ORDER}
    class_freq: dict[Category, int] = {c: 0 for c in CATEGORY_ORDER}
    vocab: set[str] = set()
    for bag, category in labeled:
        class_freq[category] += 1
        per_cat = counts[category]
        for feature, weight in bag.items():
            per_cat[feature] = per_cat.get(feature, 0.0) + weight
            vocab.add(feature)
    total_examples = len(labeled)
    priors = {c: class_freq[c] / total_examples for c in CATEGORY_ORDER}
    # Deterministic count maps: sort keys so serialization and any later
    # summations are order-stable.
    counts = {c: {k: counts[c][k] for k in sorted(counts[c])} for c in CATEGORY_ORDER}
    totals = {c: math.fsum(counts[c].values()) for c in CATEGORY_ORDER}
    return ClassifierModel(mode=mode, smoothing=smoothing, priors=priors,
                           counts=counts, totals=totals,
                           vocabulary=tuple(sorted(vocab)))


def predict(model: ClassifierModel,
            features: FeatureBag) -> tuple[Category, dict[Category, float]]:
    """Return the argmax category and the normalized posterior.

    Scores are accumulated in log space: weights multiply log-likelihood
    contributions linearly and the evidence term is taken per unit of total
    bag weight, so scaling a whole bag by a positive constant never changes
    the argmax. Ties break toward the earlier category in ``CATEGORY_ORDER``.
    """
    total_weight = math.fsum(features.values())
    scores: dict[Category, float] = {}
    for category in CATEGORY_ORDER:
        prior = model.priors[category]
        if prior == 0.0:
            scores[category] = float("-inf")
            continue
        score = math.log(prior)
        if total_weight > 0:
            evidence = 0.0
            for feature, weight in features.items():
                evidence += weight * math.log(model.likelihood(feature, category))
            score += evidence / total_weight
        scores[category] = score
    top = max(scores.values())
    # Softmax over finite scores; -inf categories get probability zero.
    exps = {c: (math.exp(s - top) if s != float("-inf") else 0.0)
            for c, s in scores.items()}
    norm = math.fsum(exps.values())
    probs = {c: exps[c] / norm for c in CATEGORY_ORDER}
    best = next(c for c in CATEGORY_ORDER if scores[c] == top)
    return best, probs


def _label_all(model: ClassifierModel,
               sentences: Sequence[SentenceRecord],
               bags: Sequence[FeatureBag]) -> list[LabeledSentence]:
    out = []
    for sentence, bag in zip(sentences, bags):
        category, probs = predict(model, bag)
        out.append(LabeledSentence.make(sentence, category, probs[category]))
    return out


def classify_abstract(model: ClassifierModel,
                      doc: "ReferenceDoc") -> list[LabeledSentence]:
    """Label every sentence of a reference-paper abstract (ssc features)."""
    if model.mode != "ssc":
        raise ValueError(f"classify_abstract: model mode is {model.mode!r}, expected 'ssc'")
    if not doc.sentences:
        return []
    return _label_all(model, doc.sentences, featurize_ssc(doc.sentences))


def classify_intro(model: ClassifierModel,
                   sentences: Sequence[SentenceRecord]) -> list[LabeledSentence]:
    """Label introduction sentences with (prev, target, next) windows (scc)."""
    if model.mode != "scc":
        raise ValueError(f"classify_intro: model mode is {model.mode!r}, expected 'scc'")
    if not sentences:
        return []
    n = len(sentences)
    bags = [featurize_scc(sentences[i],
                          sentences[i - 1] if i > 0 else None,
                          sentences[i + 1] if i + 1 < n else None)
            for i in range(n)]
    return _label_all(model, sentences, bags)


MODEL_FORMAT = "surveyforge-classifier"
MODEL_VERSION = 1


def dumps_model(model: ClassifierModel) -> str:
    """Versioned, self-describing model file text (reload-stable)."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "smoothing": model.smoothing,
        "priors": {c.value: model.priors[c] for c in CATEGORY_ORDER},
        "counts": {c.value: model.counts[c] for c in CATEGORY_ORDER},
        "totals": {c.value: model.totals[c] for c in CATEGORY_ORDER},
        "vocabulary": list(model.vocabulary),
    }
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=1) + "\n"


def save_model(model: ClassifierModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path) -> ClassifierModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a classifier model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')!r}")
    by_value = {c.value: c for c in CATEGORY_ORDER}
    return ClassifierModel(
        mode=payload["mode"],
        smoothing=payload["smoothing"],
        priors={by_value[v]: p for v, p in payload["priors"].items()},
        counts={by_value[v]: dict(m) for v, m in payload["counts"].items()},
        totals={by_value[v]: t for v, t in payload["totals"].items()},
        vocabulary=tuple(payload["vocabulary"]),
    )


def load_labeled_sentences(path: str | Path) -> list[list[tuple[str, Category]]]:
    """Read a line-delimited training file into per-abstract sentence lists.

    Each line holds {abstract_id, sentence_index, text, label}; abstracts come
    back in first-seen order with sentences ordered by index.
    """
    by_abstract: dict[str, list[tuple[int, str, Category]]] = {}
    by_value = {c.value: c for c in CATEGORY_ORDER}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            try:
                label = by_value[record["label"]]
            except KeyError:
                raise ValueError(
                    f"{path}:{lineno}: unknown label {record.get('label')!r}") from None
            by_abstract.setdefault(str(record["abstract_id"]), []).append(
                (int(record["sentence_index"]), record["text"], label))
    groups = []
    for sentences in by_abstract.values():
        sentences.sort(key=lambda item: item[0])
        groups.append([(text, label) for _, text, label in sentences])
    return groups


def build_training_pairs(groups: Iterable[list[tuple[str, Category]]],
                         mode: str) -> list[tuple[FeatureBag, Category]]:
    """Turn per-abstract (text, label) lists into feature/label pairs."""
    pairs: list[tuple[FeatureBag, Category]] = []
    for group in groups:
        records = [SentenceRecord.from_raw(text) for text, _ in group]
        labels = [label for _, label in group]
        if not records:
            continue
        if mode == "ssc":
            bags = featurize_ssc(records)
        elif mode == "scc":
            n = len(records)
            bags = [featurize_scc(records[i],
                                  records[i - 1] if i > 0 else None,
                                  records[i + 1] if i + 1 < n else None)
                    for i in range(n)]
        else:
            raise ValueError(f"build_training_pairs: unknown mode {mode!r}")
        pairs.extend(zip(bags, labels))
    return pairs
