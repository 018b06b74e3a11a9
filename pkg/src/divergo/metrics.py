"""Diversity and quality-adjacent metrics for embedded text collections.

Collective metrics over a point set:

    mean_distance   mean of all pairwise distances
    chamfer_mean    mean over items of the nearest-neighbor distance
    mst_dispersion  mean MST edge length (sum is the Remote-MST diversity)
    sparseness      mean distance to the medoid
    span            mean distance to the angular mean
    entropy         evenness of cluster occupancy at a ceil(sqrt(N))-cluster
                    dendrogram cut, Shannon entropy normalized by ln k

Plus per-prompt consistency, prompt adoption scores, thematic
flexibility/originality, deep-formality F-score, and bootstrap spreads.
"""

from __future__ import annotations

import csv
import json
import math
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import TaggedToken
from .embedding import (
    DistanceMatrix,
    EmbeddingMatrix,
    EmbeddingVector,
    angular_distance,
    mean_rows,
    pairwise_distances,
    row_distances,
)
from .errors import DegenerateMeanError, UndefinedRatioError
from .selection import build_mst

COLLECTIVE_METRICS = (
    "mean_distance",
    "chamfer_mean",
    "mst_dispersion",
    "sparseness",
    "span",
    "entropy",
)

_ARTICLES = frozenset({"a", "an", "the"})


@dataclass(frozen=True)
class ItemMetrics:
    mean_pairwise: float
    min_pairwise: float  # Chamfer: distance to the nearest other item


@dataclass(frozen=True)
class MetricsReport:
    per_item: dict[str, ItemMetrics]
    collective: dict[str, float]
    span_degenerate: bool = False
    bootstrap: dict[str, tuple[float, float]] | None = None  # name -> (mean, std)

    def _collective_order(self) -> list[str]:
        """Canonical metrics first, then any extra entries in insertion order."""
        extras = [k for k in self.collective if k not in COLLECTIVE_METRICS]
        return [k for k in COLLECTIVE_METRICS if k in self.collective] + extras

    def to_json_dict(self) -> dict:
        obj: dict = {
            "collective": {k: self.collective[k] for k in self._collective_order()},
            "per_item": {
                item_id: {"mean_pairwise": im.mean_pairwise, "min_pairwise": im.min_pairwise}
                for item_id, im in self.per_item.items()
            },
        }
        if self.span_degenerate:
            obj["span_degenerate"] = True
        if self.bootstrap is not None:
            obj["bootstrap"] = {
                k: {"mean": v[0], "std": v[1]} for k, v in sorted(self.bootstrap.items())
            }
        return obj

    def store_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    def store_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value", "boot_mean", "boot_std"])
            extras = [k for k in self.collective if k not in COLLECTIVE_METRICS]
            for name in (*COLLECTIVE_METRICS, *extras):  # degenerate span: empty value
                value = self.collective.get(name)
                boot = (self.bootstrap or {}).get(name)
                writer.writerow(
                    [
                        name,
                        "" if value is None else repr(value),
                        "" if boot is None else repr(boot[0]),
                        "" if boot is None else repr(boot[1]),
                    ]
                )


def collective_from_distances(
    dmat: np.ndarray, span_dists: np.ndarray | None = None
) -> dict[str, float]:
    """Collective metrics from a precomputed symmetric distance matrix.

    Works for any metric (the canonical 2-D layout comparisons use Euclidean
    distances). span is included only when per-item distances to a center are
    supplied. Entropy cuts the single-linkage dendrogram at k = ceil(sqrt(N))
    clusters at the smallest admissible threshold.
    """
    dmat = np.asarray(dmat, dtype=np.float64)
    n = dmat.shape[0]
    if n < 2:
        raise ValueError("collective metrics need at least 2 items")
    iu = np.triu_indices(n, k=1)
    off_diag = dmat + np.diag(np.full(n, np.inf))
    nearest = off_diag.min(axis=1)

    dendro = build_mst(DistanceMatrix([str(i) for i in range(n)], dmat))
    k = math.ceil(math.sqrt(n))
    clusters = dendro.cut_maxclust(k)
    proportions = np.array([len(c) for c in clusters], dtype=np.float64) / n
    entropy = float(-(proportions * np.log(proportions)).sum() / math.log(k)) + 0.0 if k > 1 else 0.0

    medoid = int(np.argmin(dmat.sum(axis=1)))
    metrics = {
        "mean_distance": float(dmat[iu].mean()),
        "chamfer_mean": float(nearest.mean()),
        "mst_dispersion": float(dendro.merge_distances.mean()),
        "sparseness": float(dmat[:, medoid].mean()),
        "entropy": entropy,
    }
    if span_dists is not None:
        metrics["span"] = float(np.asarray(span_dists, dtype=np.float64).mean())
    return metrics


def _span_distances(vectors: np.ndarray) -> np.ndarray | None:
    """Per-item angular distance to the angular mean; None when degenerate."""
    try:
        center = mean_rows(vectors).astype(np.float64)
    except DegenerateMeanError:
        return None
    dots = vectors.astype(np.float64) @ center
    return np.arccos(np.clip(dots, -1.0, 1.0))


def collective_diversity(m: EmbeddingMatrix) -> MetricsReport:
    """Per-item and collective diversity metrics of an embedded collection."""
    if len(m) < 2:
        raise ValueError("collective metrics need at least 2 items")
    dmat = pairwise_distances(m).d
    n = len(m)
    off_diag = dmat + np.diag(np.full(n, np.inf))
    per_item = {
        item_id: ItemMetrics(
            mean_pairwise=float(dmat[i].sum() / (n - 1)),
            min_pairwise=float(off_diag[i].min()),
        )
        for i, item_id in enumerate(m.ids)
    }
    span_dists = _span_distances(m.vectors)
    collective = collective_from_distances(dmat, span_dists)
    return MetricsReport(
        per_item=per_item, collective=collective, span_degenerate=span_dists is None
    )


def bootstrap(m: EmbeddingMatrix, B: int = 50, seed: int = 0) -> MetricsReport:
    """Collective metrics with uncertainty from B bootstrap resamples.

    Each resample draws with replacement from the rows until the original
    size is reached; the report carries (mean, std) over the B readings per
    metric. Deterministic given the seed: per-resample generators derive
    from one seed sequence.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    base = collective_diversity(m)
    n = len(m)
    children = np.random.SeedSequence(seed).spawn(B)
    readings: dict[str, list[float]] = {name: [] for name in COLLECTIVE_METRICS}
    for child in children:
        rng = np.random.default_rng(child)
        indices = rng.integers(0, n, size=n)
        vectors = m.vectors[indices]
        values = collective_from_distances(row_distances(vectors), _span_distances(vectors))
        for name, value in values.items():
            readings[name].append(value)
    spreads = {
        name: (float(np.mean(vals)), float(np.std(vals)))
        for name, vals in readings.items()
        if vals
    }
    return MetricsReport(
        per_item=base.per_item,
        collective=base.collective,
        span_degenerate=base.span_degenerate,
        bootstrap=spreads,
    )


@dataclass(frozen=True)
class IntraPromptMetrics:
    mean_phrase_distance: float
    phrase_chamfer_mean: float


def intra_prompt_metrics(prompt, phrase_vectors: EmbeddingMatrix) -> IntraPromptMetrics:
    """Similarity of the phrases inside one prompt; both metrics 0 for g = 1."""
    if not prompt.phrase_ids:
        raise ValueError("prompt has no member phrases")
    rows = [phrase_vectors.index_of(pid) for pid in prompt.phrase_ids]
    if len(rows) == 1:
        return IntraPromptMetrics(0.0, 0.0)
    dmat = row_distances(phrase_vectors.vectors[rows])
    g = len(rows)
    iu = np.triu_indices(g, k=1)
    off_diag = dmat + np.diag(np.full(g, np.inf))
    return IntraPromptMetrics(
        mean_phrase_distance=float(dmat[iu].mean()),
        phrase_chamfer_mean=float(off_diag.min(axis=1).mean()),
    )


@dataclass(frozen=True)
class AdoptionScores:
    prompt_recall: float
    prompt_precision: float
    prompt_ideation_distance: float


def _token_set(text: str, stopwords: frozenset[str]) -> set[str]:
    tokens = set()
    for raw in text.split():
        word = raw.lower().strip(string.punctuation)
        if word and word not in stopwords:
            tokens.add(word)
    return tokens


def adoption(
    prompt_text: str,
    ideation_text: str,
    prompt_vec: EmbeddingVector,
    ideation_vec: EmbeddingVector,
    stopwords: frozenset[str] = frozenset(),
) -> AdoptionScores:
    """How much of the prompt the ideation adopted.

    Tokens are whitespace-split, lowercased, punctuation-stripped, stopword
    filtered, and deduplicated. recall = |overlap| / |prompt tokens|,
    precision = |overlap| / |ideation tokens|.
    """
    prompt_tokens = _token_set(prompt_text, stopwords)
    ideation_tokens = _token_set(ideation_text, stopwords)
    if not prompt_tokens or not ideation_tokens:
        raise UndefinedRatioError("all tokens removed; adoption ratios undefined")
    overlap = len(prompt_tokens & ideation_tokens)
    return AdoptionScores(
        prompt_recall=overlap / len(prompt_tokens),
        prompt_precision=overlap / len(ideation_tokens),
        prompt_ideation_distance=angular_distance(prompt_vec, ideation_vec),
    )


@dataclass(frozen=True)
class CategoryLabeling:
    """Thematic labels per item: id -> (fine category, coarse theme)."""

    labels: dict[str, tuple[str, str]]

    def at_level(self, level: str) -> list[str]:
        if level == "category":
            return [cat for (cat, _) in self.labels.values()]
        if level == "theme":
            return [theme for (_, theme) in self.labels.values()]
        raise ValueError(f"level must be 'category' or 'theme', got {level!r}")

    def validate_against(self, known_ids: Iterable[str]) -> None:
        known = set(known_ids)
        missing = sorted(set(self.labels) - known)
        if missing:
            raise ValueError(f"labeled ids not in the evaluated collection: {missing[:5]}")


def load_labels(path: str | Path) -> CategoryLabeling:
    """CSV with header id,category,theme."""
    labels: dict[str, tuple[str, str]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "category", "theme"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"labels CSV must have header id,category,theme, got {reader.fieldnames}")
        for row in reader:
            labels[row["id"]] = (row["category"], row["theme"])
    return CategoryLabeling(labels)


@dataclass(frozen=True)
class ThematicScores:
    flexibility: int  # number of distinct labels
    originality: float  # mean infrequency of each item's label


def flexibility_originality(labels: CategoryLabeling, level: str = "category") -> ThematicScores:
    """Distinct-label count and mean label infrequency (1 - relative frequency)."""
    values = labels.at_level(level)
    if not values:
        raise ValueError("need at least one labeled item")
    total = len(values)
    counts = Counter(values)
    originality = sum(1.0 - counts[v] / total for v in values) / total
    return ThematicScores(flexibility=len(counts), originality=originality)


def fscore(tokens: Sequence[TaggedToken]) -> float:
    """Deep-formality score from part-of-speech frequencies, in [0, 100].

    F = (noun% + adjective% + preposition% + article% - pronoun% - verb%
         - adverb% - interjection% + 100) / 2

    Frequencies are percentages of the token count. Articles are the DET
    tokens "a", "an", "the"; other determiners count toward neither side.
    """
    if not tokens:
        raise ValueError("fscore needs at least one token")
    counts: Counter[str] = Counter()
    for token in tokens:
        if token.tag == "DET":
            if token.surface.lower() in _ARTICLES:
                counts["article"] += 1
        else:
            counts[token.tag] += 1
    total = len(tokens)

    def pct(key: str) -> float:
        return 100.0 * counts[key] / total

    formal = pct("NOUN") + pct("ADJ") + pct("ADP") + pct("article")
    deictic = pct("PRON") + pct("VERB") + pct("ADV") + pct("INTJ")
    return (formal - deictic + 100.0) / 2.0


def adoption_for_prompt(
    prompt,
    phrase_texts: Mapping[str, str],
    ideation_text: str,
    ideation_vec: EmbeddingVector,
    stopwords: frozenset[str] = frozenset(),
) -> AdoptionScores:
    """Adoption of a whole prompt: member phrase texts joined by spaces."""
    prompt_text = " ".join(phrase_texts[pid] for pid in prompt.phrase_ids)
    return adoption(prompt_text, ideation_text, prompt.embedding, ideation_vec, stopwords)
