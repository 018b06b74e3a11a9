"""Command-line pipeline: extract, embed, select, group, evaluate, simulate, fscore.

Each subcommand reads and writes inspectable files (JSONL/JSON/CSV) so the
pipeline stages can be chained, diffed, and re-run. Runs are deterministic:
identical inputs, flags, and seed produce byte-identical outputs.

Exit codes: 0 success, 1 data/processing error (one machine-readable JSON
line on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    FilterConfig,
    chunk_phrases,
    filter_phrases,
    load_corpus,
    load_tagged_sentences,
    load_wordlist,
    store_corpus,
)
from .embedding import fetch_embeddings, load_vectors, pairwise_distances, store_vectors
from .errors import DivergoError
from .metrics import (
    bootstrap,
    collective_diversity,
    flexibility_originality,
    fscore,
    load_labels,
)
from .selection import (
    DEFAULT_REPEL_DELTA,
    RepelConfig,
    group_prompts,
    prior_distances,
    select_diverse,
    select_repelled,
    store_prompts,
)
from .simulation import load_config, run_characterization, run_repeller_sweep


def _delta_arg(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= math.pi:
        raise argparse.ArgumentTypeError(f"delta must be in [0, pi], got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive count, got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    version = argparse.ArgumentParser(add_help=False)
    version.add_argument(
        "--version", action="version", version=f"divergo {__version__}"
    )

    parser = argparse.ArgumentParser(
        prog="divergo",
        description="Diverse prompt selection and diversity metrics over embedded text.",
        parents=[version],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser(
        "extract",
        parents=[version],
        help="chunk tagged sentences into phrases and apply the filter rules",
        description="Chunk tagged sentences (JSONL) into NP/VP/PP/NV/VN phrases. "
        "When --dictionary and --lexicon are both given, the four filter rules "
        "run (known words, word-count bounds, lexicon hit, overlap removal); "
        "otherwise the unfiltered chunks are written.",
    )
    p.add_argument("--tagged", required=True, help="tagged-sentence JSONL input")
    p.add_argument("--out", required=True, help="phrase corpus JSONL output")
    p.add_argument("--dictionary", help="allowed word list, one word per line")
    p.add_argument("--lexicon", help="domain word list, one word per line")
    p.add_argument("--min-words", type=_positive_int, default=3)
    p.add_argument("--max-words", type=_positive_int, default=5)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser(
        "embed",
        parents=[version],
        help="fetch vectors for a phrase corpus from an embedder service",
        description="POST corpus texts to an embedder service and store the "
        "returned vectors (JSONL, or binary for .bin/.ddem outputs).",
    )
    p.add_argument("--corpus", required=True, help="phrase corpus JSONL input")
    p.add_argument("--out", required=True, help="vector file output")
    p.add_argument(
        "--endpoint",
        default=os.environ.get("DIVERGO_ENDPOINT"),
        required="DIVERGO_ENDPOINT" not in os.environ,
        help="embedder base URL (default: $DIVERGO_ENDPOINT)",
    )
    p.add_argument("--batch-size", type=_positive_int, default=512)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser(
        "select",
        parents=[version],
        help="select n maximally diverse items",
        description="Diverse selection over a vector file; with --priors, "
        "items within --delta of any prior are excluded first.",
    )
    p.add_argument("--vectors", required=True, help="vector file input")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--out", required=True, help="selection JSON output")
    p.add_argument("--priors", help="prior-ideation vector file")
    p.add_argument("--delta", type=_delta_arg, default=DEFAULT_REPEL_DELTA)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser(
        "group",
        parents=[version],
        help="pack phrases into n prompts of g phrases each",
        description="Group nearest-neighbor phrases into disjoint prompts; "
        "each prompt's vector is the angular mean of its members.",
    )
    p.add_argument("--vectors", required=True, help="vector file input")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--g", type=_positive_int, required=True)
    p.add_argument("--pool", type=_positive_int, help="build this many prompts, then keep the n most diverse")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="prompts JSONL output")
    p.set_defaults(func=_cmd_group)

    p = sub.add_parser(
        "evaluate",
        parents=[version],
        help="diversity metrics of a vector collection",
        description="Collective diversity metrics (optionally with bootstrap "
        "spread, distance to priors, and thematic flexibility/originality "
        "from a labels CSV).",
    )
    p.add_argument("--vectors", required=True, help="vector file input")
    p.add_argument("--out", required=True, help="report output")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--bootstrap", type=_positive_int, metavar="B", help="bootstrap resample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--priors", help="prior vectors; adds a min_prior_distance row")
    p.add_argument("--labels", help="labels CSV (id,category,theme); adds flexibility/originality")
    p.add_argument("--level", choices=("category", "theme"), default="category")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser(
        "simulate",
        parents=[version],
        help="run a characterization or repeller sweep",
        description="Sweep selection technique, prompt count/size (and "
        "repeller count in repeller mode) per a TOML/JSON config; writes "
        "rows.csv, aggregates.csv, and report.json into --out.",
    )
    p.add_argument("--config", required=True, help="sweep config (TOML or JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=("characterize", "repeller"), default="characterize")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=_positive_int, help="override the config trial count")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "fscore",
        parents=[version],
        help="deep-formality F-score of tagged text",
        description="Formality score over tagged sentences (higher = more "
        "formal), overall and per sentence.",
    )
    p.add_argument("--tagged", required=True, help="tagged-sentence JSONL input")
    p.add_argument("--out", help="optional JSON output")
    p.set_defaults(func=_cmd_fscore)

    return parser


def _cmd_extract(args: argparse.Namespace) -> int:
    sentences = load_tagged_sentences(args.tagged)
    phrases = chunk_phrases(sentences)
    chunked = len(phrases)
    if (args.dictionary is None) != (args.lexicon is None):
        raise ValueError("filtering needs both --dictionary and --lexicon (or neither)")
    if args.dictionary is not None:
        cfg = FilterConfig(
            dictionary=load_wordlist(args.dictionary),
            domain_lexicon=load_wordlist(args.lexicon),
            min_words=args.min_words,
            max_words=args.max_words,
        )
        phrases = filter_phrases(phrases, cfg)
    store_corpus(phrases, args.out)
    print(
        f"extract: {len(sentences)} sentences -> {chunked} chunks -> "
        f"{len(phrases)} phrases -> {args.out}"
    )
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    phrases = load_corpus(args.corpus)
    if not phrases:
        raise ValueError(f"no phrases in {args.corpus}")
    m = fetch_embeddings(
        [p.text for p in phrases],
        args.endpoint,
        ids=[p.id for p in phrases],
        batch_size=args.batch_size,
    )
    store_vectors(m, args.out)
    print(f"embed: {len(m)} texts -> {m.dim}-d vectors -> {args.out}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    m = load_vectors(args.vectors)
    d = pairwise_distances(m)
    if args.priors is not None:
        priors = load_vectors(args.priors)
        cfg = RepelConfig(prior_ideations=priors, delta=args.delta)
        result = select_repelled(d, m, cfg, args.n, args.seed)
    else:
        result = select_diverse(d, args.n, args.seed)
    result.store(args.out)
    print(
        f"select: {len(result.selected_ids)} of {len(m)} items "
        f"({len(result.excluded_ids)} repelled, diversity {result.diversity:.6f}) -> {args.out}"
    )
    return 0


def _cmd_group(args: argparse.Namespace) -> int:
    m = load_vectors(args.vectors)
    d = pairwise_distances(m)
    prompts = group_prompts(m, d, args.n, args.g, pool_size=args.pool, seed=args.seed)
    store_prompts(prompts, args.out)
    print(f"group: {len(prompts)} prompts of {args.g} phrases from {len(m)} items -> {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    m = load_vectors(args.vectors)
    if args.bootstrap is not None:
        report = bootstrap(m, B=args.bootstrap, seed=args.seed)
    else:
        report = collective_diversity(m)
    if args.priors is not None:
        priors = load_vectors(args.priors)
        report.collective["min_prior_distance"] = float(prior_distances(m, priors).min())
    if args.labels is not None:
        labeling = load_labels(args.labels)
        labeling.validate_against(m.ids)
        thematic = flexibility_originality(labeling, args.level)
        report.collective["flexibility"] = float(thematic.flexibility)
        report.collective["originality"] = thematic.originality
    if args.format == "json":
        report.store_json(args.out)
    else:
        report.store_csv(args.out)
    shown = ", ".join(f"{k}={v:.4f}" for k, v in list(report.collective.items())[:3])
    print(f"evaluate: {len(m)} items ({shown}, ...) -> {args.out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    report = run_repeller_sweep(cfg) if args.mode == "repeller" else run_characterization(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.store_rows_csv(out / "rows.csv")
    report.store_aggregates_csv(out / "aggregates.csv")
    summary = {"mode": args.mode, "seed": cfg.seed, "trials": cfg.trials}
    summary.update(report.to_json_dict())
    (out / "report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(
        f"simulate[{args.mode}]: {len(report.rows)} rows, "
        f"{len(report.infeasible)} infeasible cells -> {out}"
    )
    return 0


def _cmd_fscore(args: argparse.Namespace) -> int:
    sentences = load_tagged_sentences(args.tagged)
    if not sentences:
        raise ValueError(f"no sentences in {args.tagged}")
    all_tokens = [tok for s in sentences for tok in s.tokens]
    overall = fscore(all_tokens)
    if args.out is not None:
        obj = {
            "fscore": overall,
            "token_count": len(all_tokens),
            "sentences": [
                {"source_id": s.source_id, "fscore": fscore(s.tokens), "tokens": len(s.tokens)}
                for s in sentences
            ],
        }
        Path(args.out).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    print(
        f"fscore: {overall:.2f} over {len(sentences)} sentences ({len(all_tokens)} tokens)"
        + (f" -> {args.out}" if args.out else "")
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DivergoError, OSError, ValueError) as exc:
        line = json.dumps({"error": type(exc).__name__, "detail": str(exc)})
        print(line, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
