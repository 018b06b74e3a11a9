"""Diverse subset selection over angular distance matrices.

Diversity of a point set is its Remote-MST value: the sum of edge weights of
a minimum spanning tree over the set. Selection builds a single-linkage
dendrogram (equivalent to the MST), cuts it at the requested number of
clusters, and picks from each cluster the point with the largest minimum
distance to all points outside the cluster:

    x_r = argmax over i in C_r of ( min over j not in C_r of d(i, j) )

Repeller exclusion removes phrases within a threshold of any prior ideation
before selection runs. Grouping packs nearest-neighbor phrases into prompts
whose embedding is the angular mean of their members.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import (
    DistanceMatrix,
    EmbeddingMatrix,
    EmbeddingVector,
    mean_rows,
    pairwise_distances,
)
from .errors import DimensionMismatchError, InsufficientSurvivorsError

DEFAULT_REPEL_DELTA = 0.29


def _prim_mst_edges(d: np.ndarray) -> list[tuple[int, int, float]]:
    """Dense Prim's algorithm; returns N-1 (i, j, weight) edges, deterministic.

    Ties pick the smallest vertex index (np.argmin keeps the first minimum).
    """
    n = d.shape[0]
    if n <= 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d[0].astype(np.float64).copy()
    best[0] = np.inf
    parent = np.zeros(n, dtype=np.intp)
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        k = int(np.argmin(np.where(in_tree, np.inf, best)))
        edges.append((int(parent[k]), k, float(best[k])))
        in_tree[k] = True
        improved = (d[k] < best) & ~in_tree
        best[improved] = d[k][improved]
        parent[improved] = k
        best[k] = np.inf
    return edges


def mst_weight(d: np.ndarray) -> float:
    """Remote-MST diversity of the full point set: sum of MST edge weights."""
    return float(sum(w for (_, _, w) in _prim_mst_edges(np.asarray(d, dtype=np.float64))))


@dataclass(frozen=True)
class Dendrogram:
    """Single-linkage merge tree over a distance matrix.

    Leaves are labeled 0..N-1; merge step t joins cluster labels (a, b) at
    the stated distance and creates cluster label N+t. Merge distances are
    non-decreasing and their sum equals the MST weight.
    """

    leaf_ids: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def merge_distances(self) -> np.ndarray:
        return np.array([w for (_, _, w) in self.merges], dtype=np.float64)

    def _components(self, n_merges: int) -> list[list[int]]:
        """Leaf groups after applying the first n_merges merges."""
        n = self.n_leaves
        parent = list(range(n + n_merges))

        def find(x: int) -> int:
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for t, (a, b, _) in enumerate(self.merges[:n_merges]):
            new = n + t
            parent[find(a)] = new
            parent[find(b)] = new
        groups: dict[int, list[int]] = defaultdict(list)
        for leaf in range(n):
            groups[find(leaf)].append(leaf)
        return sorted(groups.values(), key=lambda g: g[0])

    def cut(self, n_clusters: int) -> list[list[int]]:
        """Exactly n_clusters groups: undo the last n_clusters - 1 merges."""
        if not 1 <= n_clusters <= self.n_leaves:
            raise ValueError(f"cannot cut {self.n_leaves} leaves into {n_clusters} clusters")
        return self._components(self.n_leaves - n_clusters)

    def cut_maxclust(self, k: int) -> list[list[int]]:
        """At most k groups at the smallest admissible distance threshold.

        Merges at equal distance are applied together, so tied merges (e.g.
        duplicate points at distance 0) may leave fewer than k clusters.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if k >= self.n_leaves:
            return self._components(0)
        m = self.n_leaves - k
        threshold = self.merges[m - 1][2]
        while m < len(self.merges) and self.merges[m][2] <= threshold:
            m += 1
        return self._components(m)


def build_mst(d: DistanceMatrix) -> Dendrogram:
    """Single-linkage dendrogram; merge edges form an MST of the complete graph.

    MST edges processed in ascending weight order are exactly the single
    linkage merges: the next-lightest edge joining two current clusters has
    the minimum inter-cluster pairwise distance.
    """
    n = len(d)
    edges = _prim_mst_edges(d.d)
    edges.sort(key=lambda e: (e[2], e[0], e[1]))
    parent = list(range(n))
    label = list(range(n))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    merges: list[tuple[int, int, float]] = []
    for t, (i, j, w) in enumerate(edges):
        ri, rj = find(i), find(j)
        a, b = label[ri], label[rj]
        merges.append((min(a, b), max(a, b), w))
        parent[rj] = ri
        label[ri] = n + t
    return Dendrogram(leaf_ids=d.ids, merges=tuple(merges))


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a diverse-selection run."""

    selected_ids: tuple[str, ...]
    excluded_ids: tuple[str, ...]
    diversity: float  # Remote-MST value (edge-weight sum) of the selection
    seed: int
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        obj = {
            "selected": list(self.selected_ids),
            "excluded": list(self.excluded_ids),
            "diversity": self.diversity,
            "seed": self.seed,
        }
        if self.notes:
            obj["notes"] = list(self.notes)
        return obj

    def store(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")


def _cluster_representative(d: np.ndarray, ids: Sequence[str], members: Sequence[int]) -> int:
    """argmax over members of the min distance to points outside the cluster.

    Exact score ties break on the smallest id.
    """
    n = d.shape[0]
    outside = np.ones(n, dtype=bool)
    outside[list(members)] = False
    scores = d[np.ix_(list(members), np.flatnonzero(outside))].min(axis=1)
    best = scores.max()
    tied = [members[i] for i in np.flatnonzero(scores == best)]
    return min(tied, key=lambda i: ids[i])


def select_diverse(d: DistanceMatrix, n: int, seed: int = 0) -> SelectionResult:
    """Cut the dendrogram at n clusters and pick one representative per cluster.

    Deterministic given the seed; the default policy breaks exact score ties
    by smallest id. With n = 1 there are no points outside the single
    cluster, so the point with the largest mean distance to all others is
    selected and the fallback is noted in the result.
    """
    total = len(d)
    if not 1 <= n <= total:
        raise ValueError(f"cannot select {n} from {total} points")
    notes: tuple[str, ...] = ()
    if total == 1:
        return SelectionResult((d.ids[0],), (), 0.0, seed)
    if n == 1:
        mean_dist = d.d.sum(axis=1) / (total - 1)
        best = mean_dist.max()
        tied = np.flatnonzero(mean_dist == best)
        pick = min((int(i) for i in tied), key=lambda i: d.ids[i])
        return SelectionResult(
            (d.ids[pick],), (), 0.0, seed, notes=("single-cluster fallback: max mean distance",)
        )
    dendro = build_mst(d)
    clusters = dendro.cut(n)
    chosen = [_cluster_representative(d.d, d.ids, members) for members in clusters]
    diversity = mst_weight(d.d[np.ix_(chosen, chosen)])
    return SelectionResult(tuple(d.ids[i] for i in chosen), (), diversity, seed, notes)


@dataclass(frozen=True)
class RepelConfig:
    """Exclusion threshold and the prior ideations to stay away from."""

    prior_ideations: EmbeddingMatrix
    delta: float = DEFAULT_REPEL_DELTA

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


def prior_distances(phrases: EmbeddingMatrix, priors: EmbeddingMatrix) -> np.ndarray:
    """Angular distances between every phrase row and every prior row."""
    if phrases.dim != priors.dim:
        raise DimensionMismatchError(
            f"phrase dim {phrases.dim} != prior ideation dim {priors.dim}"
        )
    cross = phrases.vectors.astype(np.float64) @ priors.vectors.astype(np.float64).T
    np.clip(cross, -1.0, 1.0, out=cross)
    d = np.arccos(cross)
    # Bit-identical rows are at distance exactly 0; the dot product of a
    # float32 unit row with itself can land slightly below 1, where arccos
    # would report a spurious ~1e-4.
    stacked = np.vstack([phrases.vectors, priors.vectors])
    _, labels = np.unique(stacked, axis=0, return_inverse=True)
    d[labels[: len(phrases), None] == labels[None, len(phrases) :]] = 0.0
    return d


def select_repelled(
    d_context: DistanceMatrix,
    phrases: EmbeddingMatrix,
    cfg: RepelConfig,
    n: int,
    seed: int = 0,
) -> SelectionResult:
    """Exclude phrases within cfg.delta of any prior ideation, then select.

    Every selected phrase is guaranteed to lie at angular distance >= delta
    from every prior. Raises InsufficientSurvivorsError when exclusion
    leaves fewer than n phrases.
    """
    if tuple(d_context.ids) != tuple(phrases.ids):
        raise ValueError("distance matrix and phrase matrix must cover the same ids in order")
    if len(cfg.prior_ideations) == 0:
        survivors = list(range(len(phrases)))
        excluded: list[int] = []
    else:
        min_prior = prior_distances(phrases, cfg.prior_ideations).min(axis=1)
        repelled = min_prior < cfg.delta
        survivors = [int(i) for i in np.flatnonzero(~repelled)]
        excluded = [int(i) for i in np.flatnonzero(repelled)]
    if len(survivors) < n:
        raise InsufficientSurvivorsError(survivors=len(survivors), requested=n)
    inner = select_diverse(d_context.subset(survivors), n, seed)
    return SelectionResult(
        selected_ids=inner.selected_ids,
        excluded_ids=tuple(phrases.ids[i] for i in excluded),
        diversity=inner.diversity,
        seed=seed,
        notes=inner.notes,
    )


@dataclass(frozen=True)
class Prompt:
    """A group of 1..g phrases shown together; embedding is their angular mean."""

    prompt_id: str
    phrase_ids: tuple[str, ...]
    embedding: EmbeddingVector

    @property
    def size(self) -> int:
        return len(self.phrase_ids)


def group_prompts(
    m: EmbeddingMatrix,
    d: DistanceMatrix,
    n: int,
    g: int,
    pool_size: int | None = None,
    seed: int = 0,
) -> list[Prompt]:
    """Pack phrases into n disjoint prompts of g phrases each.

    Phrases are sorted by descending minimum pairwise distance to seed the
    most isolated phrases first; each seed absorbs its g-1 nearest
    not-yet-consumed neighbors. When pool_size exceeds n, the prompt pool is
    reduced to n by running select_diverse over the prompt embeddings.
    """
    total = len(m)
    if g < 1:
        raise ValueError("g must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    pool = n if pool_size is None else pool_size
    if pool < n:
        raise ValueError(f"pool_size {pool} smaller than n {n}")
    if pool * g > total:
        raise ValueError(f"{pool} prompts of {g} phrases need {pool * g} > {total} available")
    if tuple(d.ids) != tuple(m.ids):
        raise ValueError("distance matrix and phrase matrix must cover the same ids in order")

    dist = d.d
    if total == 1:
        min_pairwise = np.zeros(1)
    else:
        off_diag = dist + np.diag(np.full(total, np.inf))
        min_pairwise = off_diag.min(axis=1)
    seed_order = sorted(range(total), key=lambda i: (-min_pairwise[i], m.ids[i]))

    consumed = np.zeros(total, dtype=bool)
    prompts: list[Prompt] = []
    for idx in seed_order:
        if len(prompts) == pool:
            break
        if consumed[idx]:
            continue
        candidates = [j for j in range(total) if not consumed[j] and j != idx]
        candidates.sort(key=lambda j: (dist[idx, j], m.ids[j]))
        members = [idx] + candidates[: g - 1]
        consumed[members] = True
        prompts.append(
            Prompt(
                prompt_id=f"pr{len(prompts):04d}",
                phrase_ids=tuple(m.ids[i] for i in members),
                embedding=EmbeddingVector(mean_rows(m.vectors[members])),
            )
        )

    if pool > n:
        pm = prompt_matrix(prompts)
        picked = select_diverse(pairwise_distances(pm), n, seed)
        by_id = {p.prompt_id: p for p in prompts}
        prompts = [by_id[pid] for pid in picked.selected_ids]
    return prompts


def prompt_matrix(prompts: Sequence[Prompt]) -> EmbeddingMatrix:
    """Embedding matrix over prompt embeddings, keyed by prompt id."""
    return EmbeddingMatrix(
        [p.prompt_id for p in prompts], np.stack([p.embedding.values for p in prompts])
    )


def store_prompts(prompts: Sequence[Prompt], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in prompts:
            obj = {
                "prompt_id": p.prompt_id,
                "phrase_ids": list(p.phrase_ids),
                "vector": [float(x) for x in p.embedding.values],
            }
            fh.write(json.dumps(obj) + "\n")


def load_prompts(path: str | Path) -> list[Prompt]:
    prompts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            prompts.append(
                Prompt(obj["prompt_id"], tuple(obj["phrase_ids"]), EmbeddingVector(obj["vector"]))
            )
    return prompts
