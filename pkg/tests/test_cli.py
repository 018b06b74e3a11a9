"""End-to-end CLI behaviour: all subcommands, exit codes, error reporting."""

import csv
import json

import numpy as np
import pytest

from divergo import __version__
from divergo.cli import main
from divergo.corpus import load_corpus
from divergo.embedding import EmbeddingMatrix, load_vectors, store_vectors
from divergo.metrics import COLLECTIVE_METRICS
from divergo.selection import load_prompts
from oracles import unit_rows


def run(*argv):
    return main(list(argv))


@pytest.fixture
def tagged_path(tmp_path):
    sentences = [
        ("s1", [["people", "NOUN"], ["enjoy", "VERB"], ["healthy", "ADJ"],
                ["exercise", "NOUN"], ["habits", "NOUN"]]),
        ("s2", [["the", "DET"], ["daily", "ADJ"], ["walking", "NOUN"],
                ["routine", "NOUN"], ["helps", "VERB"]]),
        ("s3", [["doctors", "NOUN"], ["recommend", "VERB"], ["a", "DET"],
                ["balanced", "ADJ"], ["diet", "NOUN"], ["plan", "NOUN"]]),
    ]
    path = tmp_path / "tagged.jsonl"
    path.write_text(
        "".join(json.dumps({"source_id": sid, "tokens": toks}) + "\n" for sid, toks in sentences)
    )
    return path


@pytest.fixture
def vectors_path(tmp_path):
    rng = np.random.default_rng(60)
    m = EmbeddingMatrix([f"v{k}" for k in range(8)], unit_rows(rng, 8, 6))
    path = tmp_path / "corpus.jsonl.vec"
    store_vectors(m, path, format="jsonl")
    return path


# ---------------------------------------------------------------------------
# parser-level behaviour


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert f"divergo {__version__}" in capsys.readouterr().out


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == 2


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("transmogrify")
    assert exc.value.code == 2


def test_delta_out_of_range_is_usage_error(vectors_path, tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("select", "--vectors", str(vectors_path), "--n", "2",
            "--out", str(tmp_path / "o.json"), "--delta", "3.5")
    assert exc.value.code == 2


def test_nonpositive_count_is_usage_error(vectors_path, tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("select", "--vectors", str(vectors_path), "--n", "0",
            "--out", str(tmp_path / "o.json"))
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# extract


def test_extract_unfiltered(tagged_path, tmp_path, capsys):
    out = tmp_path / "phrases.jsonl"
    assert run("extract", "--tagged", str(tagged_path), "--out", str(out)) == 0
    phrases = load_corpus(out)
    assert phrases
    texts = {p.text for p in phrases}
    assert "healthy exercise habits" in texts
    assert "-> " in capsys.readouterr().out


def test_extract_filtered(tagged_path, tmp_path):
    words = ("people enjoy healthy exercise habits the daily walking routine "
             "helps doctors recommend a balanced diet plan")
    (tmp_path / "dict.txt").write_text("\n".join(words.split()) + "\n")
    (tmp_path / "lex.txt").write_text("exercise\nwalking\ndiet\n")
    out = tmp_path / "phrases.jsonl"
    assert run(
        "extract", "--tagged", str(tagged_path), "--out", str(out),
        "--dictionary", str(tmp_path / "dict.txt"), "--lexicon", str(tmp_path / "lex.txt"),
    ) == 0
    phrases = load_corpus(out)
    assert phrases
    lexicon = {"exercise", "walking", "diet"}
    for p in phrases:
        words = p.text.split()
        assert 3 <= len(words) <= 5
        assert lexicon & set(words)


def test_extract_dictionary_without_lexicon_fails(tagged_path, tmp_path, capsys):
    (tmp_path / "dict.txt").write_text("people\n")
    code = run("extract", "--tagged", str(tagged_path), "--out", str(tmp_path / "o.jsonl"),
               "--dictionary", str(tmp_path / "dict.txt"))
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "ValueError"
    assert "lexicon" in err["detail"]


def test_extract_missing_input_reports_json_error(tmp_path, capsys):
    code = run("extract", "--tagged", str(tmp_path / "nope.jsonl"),
               "--out", str(tmp_path / "o.jsonl"))
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "FileNotFoundError"


def test_extract_corrupt_line_reports_location(tagged_path, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(tagged_path.read_text() + "{not json\n")
    code = run("extract", "--tagged", str(bad), "--out", str(tmp_path / "o.jsonl"))
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "CorpusFormatError"
    assert ":4:" in err["detail"]


# ---------------------------------------------------------------------------
# embed


def test_embed_via_flag(tagged_path, tmp_path, stub_embedder):
    url, server = stub_embedder
    phrases = tmp_path / "phrases.jsonl"
    run("extract", "--tagged", str(tagged_path), "--out", str(phrases))
    out = tmp_path / "vectors.jsonl"
    assert run("embed", "--corpus", str(phrases), "--out", str(out),
               "--endpoint", url, "--batch-size", "2") == 0
    m = load_vectors(out)
    assert set(m.ids) == {p.id for p in load_corpus(phrases)}
    assert all(b <= 2 for b in server.request_batches)


def test_embed_endpoint_from_environment(tagged_path, tmp_path, stub_embedder, monkeypatch):
    url, _ = stub_embedder
    monkeypatch.setenv("DIVERGO_ENDPOINT", url)
    phrases = tmp_path / "phrases.jsonl"
    run("extract", "--tagged", str(tagged_path), "--out", str(phrases))
    out = tmp_path / "vectors.jsonl"
    assert run("embed", "--corpus", str(phrases), "--out", str(out)) == 0
    assert len(load_vectors(out)) > 0


def test_embed_without_endpoint_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.delenv("DIVERGO_ENDPOINT", raising=False)
    with pytest.raises(SystemExit) as exc:
        run("embed", "--corpus", str(tmp_path / "p.jsonl"), "--out", str(tmp_path / "v.jsonl"))
    assert exc.value.code == 2


def test_embed_service_failure_reports_json_error(tagged_path, tmp_path, stub_embedder, capsys):
    url, server = stub_embedder
    server.mode = "error500"
    phrases = tmp_path / "phrases.jsonl"
    run("extract", "--tagged", str(tagged_path), "--out", str(phrases))
    capsys.readouterr()
    code = run("embed", "--corpus", str(phrases), "--out", str(tmp_path / "v.jsonl"),
               "--endpoint", url)
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "EmbedStatusError"


# ---------------------------------------------------------------------------
# select


def test_select_writes_result(vectors_path, tmp_path, capsys):
    out = tmp_path / "selection.json"
    assert run("select", "--vectors", str(vectors_path), "--n", "3", "--out", str(out)) == 0
    obj = json.loads(out.read_text())
    assert len(obj["selected"]) == 3
    assert obj["excluded"] == []
    assert obj["diversity"] > 0
    assert obj["seed"] == 0
    assert "diversity" in capsys.readouterr().out


def test_select_with_priors_excludes_neighbors(vectors_path, tmp_path):
    m = load_vectors(vectors_path)
    priors = tmp_path / "priors.jsonl"
    store_vectors(EmbeddingMatrix(["prior0"], m.vectors[:1]), priors, format="jsonl")
    out = tmp_path / "selection.json"
    assert run("select", "--vectors", str(vectors_path), "--n", "2", "--out", str(out),
               "--priors", str(priors), "--delta", "0.3") == 0
    obj = json.loads(out.read_text())
    assert "v0" in obj["excluded"]  # identical to the prior, distance 0 < delta
    assert "v0" not in obj["selected"]


def test_select_n_too_large_is_data_error(vectors_path, tmp_path, capsys):
    code = run("select", "--vectors", str(vectors_path), "--n", "99",
               "--out", str(tmp_path / "o.json"))
    assert code == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "ValueError"


def test_select_deterministic_bytes(vectors_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("select", "--vectors", str(vectors_path), "--n", "4", "--out", str(a))
    run("select", "--vectors", str(vectors_path), "--n", "4", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# group


def test_group_writes_prompts(vectors_path, tmp_path):
    out = tmp_path / "prompts.jsonl"
    assert run("group", "--vectors", str(vectors_path), "--n", "2", "--g", "3",
               "--out", str(out)) == 0
    prompts = load_prompts(out)
    assert len(prompts) == 2
    assert all(len(p.phrase_ids) == 3 for p in prompts)
    ids = [pid for p in prompts for pid in p.phrase_ids]
    assert len(set(ids)) == len(ids)  # disjoint


def test_group_with_pool(vectors_path, tmp_path):
    out = tmp_path / "prompts.jsonl"
    assert run("group", "--vectors", str(vectors_path), "--n", "2", "--g", "2",
               "--pool", "4", "--out", str(out)) == 0
    assert len(load_prompts(out)) == 2


def test_group_demand_exceeding_corpus_is_data_error(vectors_path, tmp_path, capsys):
    code = run("group", "--vectors", str(vectors_path), "--n", "5", "--g", "3",
               "--out", str(tmp_path / "o.jsonl"))
    assert code == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "ValueError"


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_csv_default(vectors_path, tmp_path):
    out = tmp_path / "report.csv"
    assert run("evaluate", "--vectors", str(vectors_path), "--out", str(out)) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["metric"] for r in rows] == list(COLLECTIVE_METRICS)
    assert all(r["boot_mean"] == "" for r in rows)


def test_evaluate_with_bootstrap(vectors_path, tmp_path):
    out = tmp_path / "report.csv"
    assert run("evaluate", "--vectors", str(vectors_path), "--out", str(out),
               "--bootstrap", "5", "--seed", "3") == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["boot_mean"] != "" and r["boot_std"] != "" for r in rows)


def test_evaluate_json_format(vectors_path, tmp_path):
    out = tmp_path / "report.json"
    assert run("evaluate", "--vectors", str(vectors_path), "--out", str(out),
               "--format", "json") == 0
    obj = json.loads(out.read_text())
    assert set(COLLECTIVE_METRICS) <= set(obj["collective"])
    assert len(obj["per_item"]) == 8


def test_evaluate_with_priors_adds_min_prior_distance(vectors_path, tmp_path):
    m = load_vectors(vectors_path)
    priors = tmp_path / "priors.jsonl"
    store_vectors(EmbeddingMatrix(["prior0"], m.vectors[:1]), priors, format="jsonl")
    out = tmp_path / "report.csv"
    assert run("evaluate", "--vectors", str(vectors_path), "--out", str(out),
               "--priors", str(priors)) == 0
    with open(out, newline="") as fh:
        rows = {r["metric"]: r["value"] for r in csv.DictReader(fh)}
    assert float(rows["min_prior_distance"]) == 0.0  # prior copies an item


def test_evaluate_with_labels(vectors_path, tmp_path):
    m = load_vectors(vectors_path)
    labels = tmp_path / "labels.csv"
    labels.write_text(
        "id,category,theme\n"
        + "".join(f"{i},cat{k % 3},theme{k % 2}\n" for k, i in enumerate(m.ids))
    )
    out = tmp_path / "report.csv"
    assert run("evaluate", "--vectors", str(vectors_path), "--out", str(out),
               "--labels", str(labels), "--level", "theme") == 0
    with open(out, newline="") as fh:
        rows = {r["metric"]: float(r["value"]) for r in csv.DictReader(fh)}
    assert rows["flexibility"] == 2.0
    assert 0.0 <= rows["originality"] <= 1.0


def test_evaluate_labels_for_unknown_items_fail(vectors_path, tmp_path, capsys):
    labels = tmp_path / "labels.csv"
    labels.write_text("id,category,theme\nghost,cat,theme\n")
    code = run("evaluate", "--vectors", str(vectors_path), "--out", str(tmp_path / "o.csv"),
               "--labels", str(labels))
    assert code == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "ValueError"


# ---------------------------------------------------------------------------
# simulate


def write_sweep_config(tmp_path, repeller=False):
    path = tmp_path / "sweep.toml"
    lines = [
        'techniques = ["random", "directed"]',
        "prompt_counts = [4]",
        "prompt_sizes = [1]",
        "trials = 3",
        "seed = 5",
        "[corpus.synthetic]",
        "clusters = 4", "points_per_cluster = 8", "dim = 6", "concentration = 9.0",
    ]
    if repeller:
        lines.insert(4, "repeller_counts = [0, 2]")
        lines += ["[priors.synthetic]",
                  "clusters = 2", "points_per_cluster = 4", "dim = 6", "concentration = 9.0"]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_simulate_characterize(tmp_path, capsys):
    cfg = write_sweep_config(tmp_path)
    out = tmp_path / "sweep_out"
    assert run("simulate", "--config", str(cfg), "--out", str(out)) == 0
    assert (out / "rows.csv").exists()
    assert (out / "aggregates.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "characterize"
    assert report["seed"] == 5 and report["trials"] == 3
    assert report["row_count"] > 0
    assert "infeasible" in report
    assert "rows" in capsys.readouterr().out


def test_simulate_overrides(tmp_path):
    cfg = write_sweep_config(tmp_path)
    out = tmp_path / "sweep_out"
    assert run("simulate", "--config", str(cfg), "--out", str(out),
               "--seed", "99", "--trials", "2") == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 99 and report["trials"] == 2


def test_simulate_repeller_mode(tmp_path):
    cfg = write_sweep_config(tmp_path, repeller=True)
    out = tmp_path / "repel_out"
    assert run("simulate", "--config", str(cfg), "--out", str(out), "--mode", "repeller") == 0
    text = (out / "rows.csv").read_text()
    assert "min_prior_distance" in text
    assert json.loads((out / "report.json").read_text())["mode"] == "repeller"


def test_simulate_repeller_mode_without_counts_is_data_error(tmp_path, capsys):
    cfg = write_sweep_config(tmp_path)
    code = run("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"),
               "--mode", "repeller")
    assert code == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "ValueError"


def test_simulate_rerun_byte_identical(tmp_path):
    cfg = write_sweep_config(tmp_path)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    run("simulate", "--config", str(cfg), "--out", str(out1))
    run("simulate", "--config", str(cfg), "--out", str(out2))
    assert (out1 / "rows.csv").read_bytes() == (out2 / "rows.csv").read_bytes()
    assert (out1 / "aggregates.csv").read_bytes() == (out2 / "aggregates.csv").read_bytes()


# ---------------------------------------------------------------------------
# fscore


def test_fscore_all_nouns(tmp_path, capsys):
    path = tmp_path / "tagged.jsonl"
    path.write_text(json.dumps(
        {"source_id": "s1", "tokens": [["health", "NOUN"], ["food", "NOUN"]]}) + "\n")
    assert run("fscore", "--tagged", str(path)) == 0
    assert "100.00" in capsys.readouterr().out


def test_fscore_json_output(tagged_path, tmp_path):
    out = tmp_path / "fscore.json"
    assert run("fscore", "--tagged", str(tagged_path), "--out", str(out)) == 0
    obj = json.loads(out.read_text())
    assert 0.0 <= obj["fscore"] <= 100.0
    assert obj["token_count"] == 16
    assert [s["source_id"] for s in obj["sentences"]] == ["s1", "s2", "s3"]
    assert all(0.0 <= s["fscore"] <= 100.0 for s in obj["sentences"])


def test_fscore_empty_input_is_data_error(tmp_path, capsys):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert run("fscore", "--tagged", str(path)) == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "ValueError"
