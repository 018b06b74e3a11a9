"""Desk-scale characterization sweeps over prompt selection techniques.

Sweeps selection technique (none / random / directed), prompt count n, prompt
size g, and repeller count n_R over a synthetic or file-based embedded corpus,
evaluating the collective diversity metrics of each trial's prompt set.

Determinism: every random draw uses a generator seeded from
SeedSequence(seed, spawn_key=...) — key (0,) for corpus synthesis, (1,) for
prior synthesis, (2 + cell_index, trial) per trial — so trials are independent
and a parallel run would agree with the serial one. Directed selection and
the none arm are deterministic, so their per-cell results are computed once
and replicated across trials.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import NamedTuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .embedding import (
    DistanceMatrix,
    EmbeddingMatrix,
    load_vectors,
    mean_rows,
    pairwise_distances,
    row_distances,
)
from .errors import DegenerateMeanError, InsufficientSurvivorsError
from .metrics import COLLECTIVE_METRICS, collective_from_distances, _span_distances
from .selection import (
    DEFAULT_REPEL_DELTA,
    RepelConfig,
    group_prompts,
    mst_weight,
    prior_distances,
    prompt_matrix,
    select_diverse,
    select_repelled,
)

TECHNIQUES = ("none", "random", "directed")

# Per-trial report metrics: the collective suite plus the Remote-MST sum.
REPORT_METRICS = COLLECTIVE_METRICS + ("diversity",)


@dataclass(frozen=True)
class SyntheticSpec:
    """Clustered points on the sphere: unit Gaussian centers, noise 1/concentration."""

    clusters: int
    points_per_cluster: int
    dim: int
    concentration: float

    def __post_init__(self):
        if self.clusters < 1 or self.points_per_cluster < 1 or self.dim < 1:
            raise ValueError("clusters, points_per_cluster and dim must be >= 1")
        if not self.concentration > 0:
            raise ValueError("concentration must be > 0")


def generate_synthetic(spec: SyntheticSpec, seed: int | np.random.SeedSequence = 0) -> EmbeddingMatrix:
    """Draw a clustered corpus on the unit sphere, deterministic given seed.

    Centers are normalized Gaussian draws (uniform on the sphere); members
    are center + Gaussian noise scaled by 1/concentration, then normalized.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((spec.clusters, spec.dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    ids = []
    rows = np.empty((spec.clusters * spec.points_per_cluster, spec.dim))
    for ci in range(spec.clusters):
        noise = rng.standard_normal((spec.points_per_cluster, spec.dim)) / spec.concentration
        block = centers[ci] + noise
        rows[ci * spec.points_per_cluster : (ci + 1) * spec.points_per_cluster] = block
        ids.extend(f"c{ci:03d}-{pi:04d}" for pi in range(spec.points_per_cluster))
    return EmbeddingMatrix(ids, rows)


@dataclass(frozen=True)
class SimulationConfig:
    """One sweep: techniques x prompt_counts x prompt_sizes (x repeller_counts)."""

    techniques: tuple[str, ...] = ("random", "directed")
    prompt_counts: tuple[int, ...] = (10, 30, 50)
    prompt_sizes: tuple[int, ...] = (1,)
    repeller_counts: tuple[int, ...] | None = None
    trials: int = 50
    seed: int = 0
    delta: float = DEFAULT_REPEL_DELTA
    corpus_path: str | None = None
    corpus_synthetic: SyntheticSpec | None = None
    priors_path: str | None = None
    priors_synthetic: SyntheticSpec | None = None

    def __post_init__(self):
        for t in self.techniques:
            if t not in TECHNIQUES:
                raise ValueError(f"unknown technique {t!r}; expected one of {TECHNIQUES}")
        if not self.techniques:
            raise ValueError("need at least one technique")
        for n in self.prompt_counts:
            if n < 1:
                raise ValueError("prompt counts must be positive")
        for g in self.prompt_sizes:
            if g < 1:
                raise ValueError("prompt sizes must be positive")
        if self.repeller_counts is not None:
            for r in self.repeller_counts:
                if r < 0:
                    raise ValueError("repeller counts must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if (self.corpus_path is None) == (self.corpus_synthetic is None):
            raise ValueError("exactly one of corpus_path / corpus_synthetic is required")
        if self.priors_path is not None and self.priors_synthetic is not None:
            raise ValueError("at most one of priors_path / priors_synthetic")


def _spec_from_dict(obj: dict) -> SyntheticSpec:
    return SyntheticSpec(
        clusters=int(obj["clusters"]),
        points_per_cluster=int(obj["points_per_cluster"]),
        dim=int(obj["dim"]),
        concentration=float(obj["concentration"]),
    )


def load_config(path: str | Path) -> SimulationConfig:
    """Read a sweep config from TOML (.toml) or JSON.

    Corpus and priors are given as [corpus] path = "..." or a
    [corpus.synthetic] table with clusters/points_per_cluster/dim/concentration.
    """
    path = Path(path)
    if path.suffix == ".toml":
        obj = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        obj = json.loads(path.read_text(encoding="utf-8"))

    def source(key: str) -> tuple[str | None, SyntheticSpec | None]:
        section = obj.get(key)
        if section is None:
            return None, None
        if "path" in section:
            return str(section["path"]), None
        if "synthetic" in section:
            return None, _spec_from_dict(section["synthetic"])
        raise ValueError(f"[{key}] needs either path or [{key}.synthetic]")

    corpus_path, corpus_synth = source("corpus")
    priors_path, priors_synth = source("priors")
    repeller = obj.get("repeller_counts")
    return SimulationConfig(
        techniques=tuple(str(t).lower() for t in obj.get("techniques", ["random", "directed"])),
        prompt_counts=tuple(int(n) for n in obj.get("prompt_counts", [10, 30, 50])),
        prompt_sizes=tuple(int(g) for g in obj.get("prompt_sizes", [1])),
        repeller_counts=None if repeller is None else tuple(int(r) for r in repeller),
        trials=int(obj.get("trials", 50)),
        seed=int(obj.get("seed", 0)),
        delta=float(obj.get("delta", DEFAULT_REPEL_DELTA)),
        corpus_path=corpus_path,
        corpus_synthetic=corpus_synth,
        priors_path=priors_path,
        priors_synthetic=priors_synth,
    )


class SimulationRow(NamedTuple):
    technique: str
    n: int
    g: int
    n_R: int
    trial: int
    metric: str
    value: float


@dataclass(frozen=True)
class InfeasibleCell:
    technique: str
    n: int
    g: int
    n_R: int
    reason: str


@dataclass(frozen=True)
class SimulationReport:
    """Per-trial metric rows plus the cells that could not run."""

    rows: tuple[SimulationRow, ...]
    infeasible: tuple[InfeasibleCell, ...] = ()

    def cell_values(self, technique: str, n: int, g: int, n_R: int, metric: str) -> list[float]:
        return [
            r.value
            for r in self.rows
            if (r.technique, r.n, r.g, r.n_R, r.metric) == (technique, n, g, n_R, metric)
        ]

    def aggregates(self) -> list[tuple[str, int, int, int, str, float, float]]:
        """(technique, n, g, n_R, metric, mean, std) per cell, population std."""
        order: list[tuple] = []
        groups: dict[tuple, list[float]] = {}
        for r in self.rows:
            key = (r.technique, r.n, r.g, r.n_R, r.metric)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(r.value)
        return [
            (*key, float(np.mean(vals)), float(np.std(vals)))
            for key in order
            for vals in [groups[key]]
        ]

    def store_rows_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["technique", "n", "g", "n_R", "trial", "metric", "value"])
            for r in self.rows:
                writer.writerow([r.technique, r.n, r.g, r.n_R, r.trial, r.metric, repr(r.value)])

    def store_aggregates_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["technique", "n", "g", "n_R", "metric", "mean", "std"])
            for technique, n, g, n_R, metric, mean, std in self.aggregates():
                writer.writerow([technique, n, g, n_R, metric, repr(mean), repr(std)])

    def to_json_dict(self) -> dict:
        return {
            "row_count": len(self.rows),
            "infeasible": [
                {"technique": c.technique, "n": c.n, "g": c.g, "n_R": c.n_R, "reason": c.reason}
                for c in self.infeasible
            ],
        }


def _resolve_matrix(
    path: str | None, synth: SyntheticSpec | None, seed: np.random.SeedSequence
) -> EmbeddingMatrix | None:
    if path is not None:
        return load_vectors(path)
    if synth is not None:
        return generate_synthetic(synth, seed)
    return None


def _trial_rng(seed: int, cell_idx: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2 + cell_idx, trial)))


def _evaluate(vectors: np.ndarray, diversity: float | None = None) -> dict[str, float]:
    """Collective metrics of a prompt-set's vectors plus the Remote-MST sum."""
    dmat = row_distances(vectors)
    values = collective_from_distances(dmat, _span_distances(vectors))
    values["diversity"] = mst_weight(dmat) if diversity is None else diversity
    return values


def _emit(rows: list[SimulationRow], technique: str, n: int, g: int, n_R: int, trial: int,
          values: dict[str, float]) -> None:
    for metric in REPORT_METRICS:
        if metric in values:
            rows.append(SimulationRow(technique, n, g, n_R, trial, metric, values[metric]))
    for metric in values:
        if metric not in REPORT_METRICS:
            rows.append(SimulationRow(technique, n, g, n_R, trial, metric, values[metric]))


def _directed_values(corpus: EmbeddingMatrix, d: DistanceMatrix, n: int, g: int, seed: int
                     ) -> dict[str, float]:
    if g == 1:
        result = select_diverse(d, n, seed)
        picked = [corpus.index_of(i) for i in result.selected_ids]
        return _evaluate(corpus.vectors[picked], diversity=result.diversity)
    prompts = group_prompts(corpus, d, n, g, seed=seed)
    return _evaluate(prompt_matrix(prompts).vectors)


def run_characterization(cfg: SimulationConfig) -> SimulationReport:
    """Sweep technique x n x g, `trials` runs per cell, n_R fixed at 0.

    Random draws n*g phrases uniformly without replacement per trial and, for
    g > 1, chunks the shuffled draw into n groups of g (so no remainder ever
    arises). Directed selects via the diverse-selection module (grouping for
    g > 1). None evaluates the supplied prior-ideation set as-is. Cells whose
    demand exceeds the corpus (or that yield < 2 points to evaluate) are
    reported infeasible rather than failing the run.
    """
    master = cfg.seed
    corpus = _resolve_matrix(
        cfg.corpus_path, cfg.corpus_synthetic, np.random.SeedSequence(master, spawn_key=(0,))
    )
    assert corpus is not None  # config guarantees a corpus source
    priors = _resolve_matrix(
        cfg.priors_path, cfg.priors_synthetic, np.random.SeedSequence(master, spawn_key=(1,))
    )
    if "none" in cfg.techniques and priors is None:
        raise ValueError("the none technique needs a prior-ideation matrix (priors_*)")

    d = pairwise_distances(corpus)
    total = len(corpus)
    rows: list[SimulationRow] = []
    infeasible: list[InfeasibleCell] = []
    none_values: dict[str, float] | None = None

    cells = list(product(cfg.techniques, cfg.prompt_counts, cfg.prompt_sizes))
    for cell_idx, (technique, n, g) in enumerate(cells):
        if technique == "none":
            if len(priors) < 2:
                infeasible.append(InfeasibleCell(technique, n, g, 0, "fewer than 2 priors"))
                continue
            if none_values is None:
                none_values = _evaluate(priors.vectors)
            for trial in range(cfg.trials):
                _emit(rows, technique, n, g, 0, trial, none_values)
            continue
        if n * g > total:
            infeasible.append(
                InfeasibleCell(technique, n, g, 0, f"needs {n * g} phrases, corpus has {total}")
            )
            continue
        if n < 2:
            infeasible.append(
                InfeasibleCell(technique, n, g, 0, "collective metrics need >= 2 prompts")
            )
            continue
        if technique == "directed":
            try:
                values = _directed_values(corpus, d, n, g, master)
            except DegenerateMeanError as exc:
                infeasible.append(InfeasibleCell(technique, n, g, 0, str(exc)))
                continue
            for trial in range(cfg.trials):
                _emit(rows, technique, n, g, 0, trial, values)
            continue
        # random arm
        for trial in range(cfg.trials):
            rng = _trial_rng(master, cell_idx, trial)
            order = rng.permutation(total)[: n * g]
            try:
                if g == 1:
                    vectors = corpus.vectors[order]
                else:
                    vectors = np.stack(
                        [mean_rows(corpus.vectors[chunk]) for chunk in order.reshape(n, g)]
                    )
            except DegenerateMeanError as exc:
                infeasible.append(InfeasibleCell(technique, n, g, 0, f"trial {trial}: {exc}"))
                break
            _emit(rows, technique, n, g, 0, trial, _evaluate(vectors))
    return SimulationReport(rows=tuple(rows), infeasible=tuple(infeasible))


def run_repeller_sweep(cfg: SimulationConfig) -> SimulationReport:
    """Directed selection with n_R sampled prior ideations repelling it.

    For each (n, n_R) cell and trial: draw n_R priors uniformly without
    replacement, exclude phrases within delta of any of them, select n
    diverse phrases from the survivors, and report the collective metrics
    plus min_prior_distance (omitted when n_R = 0, where the run reduces to
    plain directed selection). Selection at distance < delta from a sampled
    prior is a contract violation and raises; cells that run out of
    survivors are reported infeasible.
    """
    if cfg.repeller_counts is None:
        raise ValueError("run_repeller_sweep needs repeller_counts")
    master = cfg.seed
    corpus = _resolve_matrix(
        cfg.corpus_path, cfg.corpus_synthetic, np.random.SeedSequence(master, spawn_key=(0,))
    )
    assert corpus is not None
    priors = _resolve_matrix(
        cfg.priors_path, cfg.priors_synthetic, np.random.SeedSequence(master, spawn_key=(1,))
    )
    if priors is None and any(r > 0 for r in cfg.repeller_counts):
        raise ValueError("repeller sweep needs a prior-ideation matrix (priors_*)")

    d = pairwise_distances(corpus)
    total = len(corpus)
    rows: list[SimulationRow] = []
    infeasible: list[InfeasibleCell] = []

    cells = list(product(cfg.prompt_counts, cfg.repeller_counts))
    for cell_idx, (n, n_R) in enumerate(cells):
        if n > total:
            infeasible.append(
                InfeasibleCell("directed", n, 1, n_R, f"needs {n} phrases, corpus has {total}")
            )
            continue
        if n < 2:
            infeasible.append(
                InfeasibleCell("directed", n, 1, n_R, "collective metrics need >= 2 prompts")
            )
            continue
        if n_R > 0 and n_R > len(priors):
            infeasible.append(
                InfeasibleCell("directed", n, 1, n_R, f"needs {n_R} priors, have {len(priors)}")
            )
            continue
        if n_R == 0:
            values = _directed_values(corpus, d, n, 1, master)
            for trial in range(cfg.trials):
                _emit(rows, "directed", n, 1, n_R, trial, values)
            continue
        for trial in range(cfg.trials):
            rng = _trial_rng(master, cell_idx, trial)
            pick = rng.permutation(len(priors))[:n_R]
            sampled = EmbeddingMatrix([priors.ids[i] for i in pick], priors.vectors[pick])
            try:
                result = select_repelled(
                    d, corpus, RepelConfig(sampled, cfg.delta), n, master
                )
            except InsufficientSurvivorsError as exc:
                infeasible.append(InfeasibleCell("directed", n, 1, n_R, f"trial {trial}: {exc}"))
                break
            picked = [corpus.index_of(i) for i in result.selected_ids]
            selected = EmbeddingMatrix(list(result.selected_ids), corpus.vectors[picked])
            min_prior = float(prior_distances(selected, sampled).min())
            if min_prior < cfg.delta:
                raise RuntimeError(
                    f"repeller contract violated: selection at {min_prior} < delta {cfg.delta}"
                )
            values = _evaluate(corpus.vectors[picked], diversity=result.diversity)
            values["min_prior_distance"] = min_prior
            _emit(rows, "directed", n, 1, n_R, trial, values)
    return SimulationReport(rows=tuple(rows), infeasible=tuple(infeasible))
