"""Command line entry points for the ingestion adapters."""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from .embeddings import EndpointEncoder, SyntheticEncoder, export_embeddings
from .groundings import convert_groundings
from .parsing import export_parses, make_backend, read_docs
from .validate import validate_corpus


@click.group()
def main():
    """Adapters producing the corpus file contract for the retrieval engine."""
    level = os.environ.get("MGGRAPH_ADAPTERS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("docs_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--backend", "backend_name", default="heuristic",
              type=click.Choice(["heuristic", "spacy"]),
              help="Parser backend; spacy requires an installed model.")
@click.option("--model", default="en_core_web_trf",
              help="spaCy model name (spacy backend only).")
def parse(docs_path, out_dir, backend_name, model):
    """Parse raw documents into chunks, sentences, entities, and images."""
    try:
        docs = read_docs(docs_path)
        backend = make_backend(backend_name, model)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    summary = export_parses(docs, out_dir, backend)
    problems = validate_corpus_partial(out_dir)
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        raise click.ClickException(
            f"export failed validation with {len(problems)} problem(s)")
    click.echo(json.dumps(summary, sort_keys=True))


def validate_corpus_partial(out_dir) -> list[str]:
    """Validate a parse export that has no groundings file yet."""
    return [p for p in validate_corpus(out_dir)
            if not p.startswith("groundings.jsonl")]


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--mode", default="synthetic",
              type=click.Choice(["synthetic", "endpoint"]))
@click.option("--url", default=None, help="Embedding endpoint URL.")
@click.option("--dim", default=64, show_default=True, type=int)
@click.option("--queries", "queries_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Optional queries.jsonl whose textQuery values are "
                   "embedded alongside the corpus.")
def embed(corpus_dir, out_dir, mode, url, dim, queries_path):
    """Export per-level MGEM embedding files for a parsed corpus."""
    if mode == "endpoint":
        if not url:
            raise click.UsageError("--url is required with --mode endpoint")
        encoder = EndpointEncoder(url, dim)
    else:
        encoder = SyntheticEncoder(dim)

    query_texts = None
    if queries_path:
        query_texts = []
        with open(queries_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    query_texts.append(json.loads(line)["textQuery"])

    try:
        counts = export_embeddings(corpus_dir, out_dir, encoder, query_texts)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(counts, sort_keys=True))


@main.command("convert-groundings")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--skip-invalid", is_flag=True,
              help="Write valid rows and report the rest instead of failing.")
def convert_groundings_cmd(input_path, output_path, skip_invalid):
    """Normalize external detection rows into groundings.jsonl."""
    written, errors = convert_groundings(input_path, output_path)
    for lineno, message in errors:
        click.echo(f"{input_path}:{lineno}: {message}", err=True)
    click.echo(f"wrote {written} groundings, rejected {len(errors)}")
    if errors and not skip_invalid:
        Path(output_path).unlink(missing_ok=True)
        raise click.ClickException(
            f"{len(errors)} invalid row(s); rerun with --skip-invalid "
            "to keep the valid ones")


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
def validate(corpus_dir):
    """Check an exported corpus directory against the ingestion contract."""
    problems = validate_corpus(corpus_dir)
    for problem in problems:
        click.echo(problem, err=True)
    if problems:
        raise click.ClickException(f"{len(problems)} problem(s) found")
    click.echo("corpus is valid")


if __name__ == "__main__":
    sys.exit(main())
