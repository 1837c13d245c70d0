"""Command-line surface: build, query, eval, inspect."""

from __future__ import annotations

import json
import logging
import os
import sys
import time
from collections import Counter
from pathlib import Path

import click

from . import config as cfg
from . import persistence
from .embeddings import FileProvider, FixtureProvider, RemoteProvider
from .errors import MGGraphError, SchemaError
from .evaluation import recall_at_k, report_csv
from .retrieval import Query, build_transition, run_query

EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3

logger = logging.getLogger("mggraph")


def _setup_logging() -> None:
    level = os.environ.get("MGGRAPH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _make_provider(name, corpus_or_index_dir, dim, remote_url):
    if name == "fixture":
        return FixtureProvider(dim=dim)
    if name == "files":
        return FileProvider(Path(corpus_or_index_dir) / "embeddings")
    if name == "remote":
        if not remote_url:
            raise click.UsageError("--remote-url is required with --provider remote")
        return RemoteProvider(remote_url, dim=dim)
    raise click.UsageError(f"unknown provider {name!r}")


def _resolve_config(config_path, preset_name):
    config = cfg.DEFAULT_CONFIG
    if preset_name:
        try:
            config = cfg.preset(preset_name)
        except KeyError as exc:
            raise click.UsageError(str(exc.args[0]))
    if config_path:
        config = cfg.load_config(config_path, base=config)
    return config


@click.group()
def main():
    """Multi-granularity multimodal graph retrieval engine."""
    _setup_logging()


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("index_dir", type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--preset", "preset_name", default=None)
@click.option("--provider", default="fixture", show_default=True,
              type=click.Choice(["fixture", "files", "remote"]))
@click.option("--remote-url", default=None)
@click.option("--dim", default=64, show_default=True)
def build(corpus_dir, index_dir, config_path, preset_name, provider, remote_url, dim):
    """Build an index directory from an ingestion corpus directory."""
    config = _resolve_config(config_path, preset_name)
    try:
        prov = _make_provider(provider, corpus_dir, dim, remote_url)
        manifest = persistence.build_from_corpus(corpus_dir, index_dir, config, prov)
    except SchemaError as exc:
        raise click.ClickException(f"schema error: {exc}")
    except MGGraphError as exc:
        raise click.ClickException(str(exc))
    counts = manifest["counts"]
    click.echo(
        f"built index: {counts['chunks']} chunks, {counts['images']} images, "
        f"{counts['multimodalNodes']} multimodal nodes, {counts['edges']} edges"
    )
    click.echo(f"content hash: {manifest['contentHash']}")


def _load(index_dir, provider, remote_url, dim):
    prov = _make_provider(provider, index_dir, dim, remote_url)
    return persistence.load_index(index_dir, prov)


@main.command()
@click.argument("index_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("query_json")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--preset", "preset_name", default=None)
@click.option("--provider", default="fixture", show_default=True,
              type=click.Choice(["fixture", "files", "remote"]))
@click.option("--remote-url", default=None)
@click.option("--top-k", "top_k", type=int, default=None)
def query(index_dir, query_json, config_path, preset_name, provider, remote_url, top_k):
    """Run one query (a JSON object or a path to one) against an index."""
    try:
        raw = json.loads(Path(query_json).read_text(encoding="utf-8")
                         if Path(query_json).is_file() else query_json)
    except ValueError as exc:
        raise click.UsageError(f"malformed query JSON: {exc}")
    if not isinstance(raw, dict):
        raise click.UsageError("query JSON must be an object")

    config = _resolve_config(config_path, preset_name)
    if "configOverrides" in raw:
        try:
            config = cfg.apply_overrides(config, raw["configOverrides"])
        except (KeyError, TypeError, ValueError) as exc:
            raise click.UsageError(f"bad configOverrides: {exc}")
    if top_k is not None:
        config = cfg.apply_overrides(config, {"answer_top_k": top_k})

    try:
        loaded = _load(index_dir, provider, remote_url, 64)
        loaded_dim = loaded.manifest["embeddingDim"]
        if getattr(loaded.embedding_index.provider, "dim", loaded_dim) != loaded_dim:
            loaded.embedding_index.provider.dim = loaded_dim
        result = run_query(
            Query(text=raw.get("textQuery"), image_ref=raw.get("imageQueryRef")),
            loaded.embedding_index, loaded.graph, config, loaded.chunk_texts,
        )
    except MGGraphError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(result, sort_keys=True))
    if not result["converged"]:
        sys.exit(EXIT_NO_CONVERGENCE)


@main.command("eval")
@click.argument("index_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("queries_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--preset", "preset_name", default=None)
@click.option("--provider", default="fixture", show_default=True,
              type=click.Choice(["fixture", "files", "remote"]))
@click.option("--remote-url", default=None)
@click.option("--ks", default="1,5,10", show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
def eval_cmd(index_dir, queries_file, gold_file, config_path, preset_name,
             provider, remote_url, ks, csv_path):
    """Batch-run queries and score them against gold evidence with Recall@K."""
    config = _resolve_config(config_path, preset_name)
    k_values = [int(k) for k in ks.split(",") if k]

    try:
        loaded = _load(index_dir, provider, remote_url, 64)
    except MGGraphError as exc:
        raise click.ClickException(str(exc))

    queries = {}
    with open(queries_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "queryId" not in rec:
                raise click.ClickException(f"{queries_file}:{lineno}: missing queryId")
            queries[rec["queryId"]] = Query(
                text=rec.get("textQuery"), image_ref=rec.get("imageQueryRef")
            )
    gold = {}
    with open(gold_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "queryId" not in rec or "goldChunkIds" not in rec:
                raise click.ClickException(
                    f"{gold_file}:{lineno}: need queryId and goldChunkIds")
            gold[rec["queryId"]] = set(rec["goldChunkIds"])

    config = cfg.apply_overrides(config, {"answer_top_k": max(k_values)})
    transition = build_transition(loaded.graph)
    started = time.perf_counter()
    rankings = {}
    for query_id, q in queries.items():
        result = run_query(q, loaded.embedding_index, loaded.graph, config,
                           loaded.chunk_texts, transition=transition)
        rankings[query_id] = [c["chunkId"] for c in result["chunks"]]
    try:
        report = recall_at_k(rankings, gold, k_values,
                             known_chunk_ids=set(loaded.graph.chunk_ids))
    except MGGraphError as exc:
        raise click.ClickException(str(exc))
    report.runtime_seconds = time.perf_counter() - started
    click.echo(json.dumps(report.to_dict(), sort_keys=True))
    if csv_path:
        Path(csv_path).write_text(report_csv(report), encoding="utf-8")


@main.command()
@click.argument("index_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--provider", default="fixture", show_default=True,
              type=click.Choice(["fixture", "files", "remote"]))
def inspect(index_dir, provider):
    """Print partition sizes, edge histogram, degree summary, dangling count."""
    try:
        loaded = _load(index_dir, provider, None, 64)
    except MGGraphError as exc:
        raise click.ClickException(str(exc))
    graph = loaded.graph
    click.echo(f"chunks: {graph.n_chunks}")
    click.echo(f"images: {graph.n_images}")
    click.echo(f"multimodal nodes: {len(graph.nodes)}")
    click.echo(f"sentences: {len(graph.sentence_ids)}")
    click.echo(f"objects: {len(graph.object_ids)}")
    histogram = Counter(edge.kind for edge in graph.edges)
    for kind in sorted(histogram):
        click.echo(f"edges[{kind}]: {histogram[kind]}")
    degrees = [0] * graph.n_nodes
    for edge in graph.edges:
        degrees[edge.src] += 1
        degrees[edge.dst] += 1
    dangling = sum(1 for d in degrees if d == 0)
    if degrees:
        click.echo(
            f"degree: min={min(degrees)} max={max(degrees)} "
            f"mean={sum(degrees) / len(degrees):.2f}"
        )
    click.echo(f"dangling nodes: {dangling}")


if __name__ == "__main__":
    main()
