"""Index build orchestration and the on-disk index lifecycle.

An index directory holds nodes.jsonl, edges.jsonl, triplets.jsonl,
smi.coo / omi.coo, embeddings/*.mgem (+ id sidecars), and manifest.json.
Builds are atomic: everything is written to a temp directory that is
renamed into place, guarded by a lock file.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import scipy.sparse as sp

from . import embeddings as emb
from .config import RetrievalConfig
from .errors import CorruptIndex, MGGraphError
from .graph import Edge, HeteroGraph, build_graph
from .ingestion import Corpus, load_corpus
from .model import MultimodalNode, RelationTriplet
from .relations import extract_relations

FORMAT_VERSION = 1


@dataclass
class LoadedIndex:
    graph: HeteroGraph
    embedding_index: emb.EmbeddingIndex
    chunk_texts: dict[str, str]
    manifest: dict


def sentence_text(sentence) -> str:
    return " ".join(tok.text for tok in sentence.tokens)


def build_index_data(corpus: Corpus, config: RetrievalConfig, provider):
    """Run extraction, fusion, edge/incidence assembly, and embedding."""
    triplets: list[RelationTriplet] = []
    for sentence in corpus.sentences:
        triplets.extend(extract_relations(sentence, config.preposition_map))

    graph = build_graph(
        corpus.chunks,
        corpus.sentences,
        triplets,
        corpus.image_ids,
        corpus.groundings,
        tau=config.tau,
        strict_grounded_nodes=config.strict_grounded_nodes,
    )

    sentence_by_id = {s.sentence_id: s for s in corpus.sentences}
    chunk_by_id = {c.chunk_id: c for c in corpus.chunks}
    embedding_index = emb.build_matrices(
        sentences=[(sid, sentence_text(sentence_by_id[sid])) for sid in graph.sentence_ids],
        chunks=[(cid, chunk_by_id[cid].text) for cid in graph.chunk_ids],
        images=graph.image_ids,
        objects=graph.object_ids,
        provider=provider,
    )
    return graph, embedding_index, triplets


def _write_coo(path: Path, matrix: sp.csr_matrix) -> None:
    coo = matrix.tocoo()
    order = sorted(zip(coo.row.tolist(), coo.col.tolist()))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row, col in order:
            fh.write(f"{row} {col}\n")


def _read_coo(path: Path) -> sp.csr_matrix:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorruptIndex(path, str(exc)) from exc
    try:
        rows, cols = map(int, lines[0].split())
        entries = [tuple(map(int, line.split())) for line in lines[1:] if line]
    except (IndexError, ValueError) as exc:
        raise CorruptIndex(path, f"malformed COO data: {exc}") from exc
    r = [e[0] for e in entries]
    c = [e[1] for e in entries]
    return sp.csr_matrix(([1.0] * len(entries), (r, c)), shape=(rows, cols))


def content_hash(directory: Path) -> str:
    """SHA-256 over every index file except the manifest, in path order."""
    digest = hashlib.sha256()
    for path in sorted(directory.rglob("*")):
        if path.is_dir() or path.name == "manifest.json":
            continue
        digest.update(str(path.relative_to(directory)).encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()


def save_index(
    index_dir,
    graph: HeteroGraph,
    embedding_index: emb.EmbeddingIndex,
    triplets: list[RelationTriplet],
    chunk_texts: dict[str, str],
) -> dict:
    """Atomically write the index directory; returns the manifest."""
    index_dir = Path(index_dir)
    index_dir.parent.mkdir(parents=True, exist_ok=True)
    lock_path = index_dir.parent / (index_dir.name + ".lock")
    try:
        lock_fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise MGGraphError(f"another build holds {lock_path}") from None
    try:
        temp_dir = Path(tempfile.mkdtemp(prefix=index_dir.name + ".tmp.", dir=index_dir.parent))
        try:
            _write_index_files(temp_dir, graph, embedding_index, triplets, chunk_texts)
            manifest = _make_manifest(temp_dir, graph, embedding_index)
            (temp_dir / "manifest.json").write_text(
                json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
            )
            if index_dir.exists():
                shutil.rmtree(index_dir)
            os.rename(temp_dir, index_dir)
        except BaseException:
            shutil.rmtree(temp_dir, ignore_errors=True)
            raise
    finally:
        os.close(lock_fd)
        os.unlink(lock_path)
    return manifest


def _write_index_files(directory, graph, embedding_index, triplets, chunk_texts):
    with open(directory / "nodes.jsonl", "w", encoding="utf-8") as fh:
        for chunk_id in graph.chunk_ids:
            fh.write(json.dumps(
                {"kind": "chunk", "id": chunk_id, "text": chunk_texts.get(chunk_id, "")},
                sort_keys=True) + "\n")
        for image_id in graph.image_ids:
            fh.write(json.dumps({"kind": "image", "id": image_id}, sort_keys=True) + "\n")
        for node in graph.nodes:
            fh.write(json.dumps(
                {
                    "kind": "multimodal",
                    "id": node.node_id,
                    "entityKey": node.entity_key,
                    "objectIds": sorted(node.object_ids),
                    "sourceChunkIds": sorted(node.source_chunk_ids),
                },
                sort_keys=True) + "\n")

    with open(directory / "edges.jsonl", "w", encoding="utf-8") as fh:
        for edge in graph.edges:
            fh.write(json.dumps(
                {"src": edge.src, "dst": edge.dst, "kind": edge.kind, "weight": edge.weight},
                sort_keys=True) + "\n")

    with open(directory / "triplets.jsonl", "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(json.dumps(
                {"subject": t.subject, "predicate": t.predicate,
                 "object": t.object, "sentenceId": t.sentence_id},
                sort_keys=True) + "\n")

    _write_coo(directory / "smi.coo", graph.smi)
    _write_coo(directory / "omi.coo", graph.omi)
    emb.save_index(embedding_index, directory / "embeddings")


def _make_manifest(directory, graph, embedding_index) -> dict:
    return {
        "formatVersion": FORMAT_VERSION,
        "counts": {
            "chunks": graph.n_chunks,
            "images": graph.n_images,
            "multimodalNodes": len(graph.nodes),
            "sentences": len(graph.sentence_ids),
            "objects": len(graph.object_ids),
            "edges": len(graph.edges),
        },
        "tau": graph.tau,
        "embeddingDim": embedding_index.dim,
        "providerId": embedding_index.provider.provider_id,
        "builtAt": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "contentHash": content_hash(Path(directory)),
    }


def load_index(index_dir, provider) -> LoadedIndex:
    """Load a persisted index; refuses mismatched format versions."""
    index_dir = Path(index_dir)
    manifest_path = index_dir / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CorruptIndex(manifest_path, str(exc)) from exc
    if manifest.get("formatVersion") != FORMAT_VERSION:
        raise CorruptIndex(
            manifest_path,
            f"format version {manifest.get('formatVersion')} != {FORMAT_VERSION}",
        )

    chunk_ids, image_ids, nodes, chunk_texts = [], [], [], {}
    nodes_path = index_dir / "nodes.jsonl"
    try:
        with open(nodes_path, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                if rec["kind"] == "chunk":
                    chunk_ids.append(rec["id"])
                    chunk_texts[rec["id"]] = rec.get("text", "")
                elif rec["kind"] == "image":
                    image_ids.append(rec["id"])
                else:
                    nodes.append(MultimodalNode(
                        node_id=rec["id"],
                        entity_key=rec["entityKey"],
                        object_ids=set(rec["objectIds"]),
                        source_chunk_ids=set(rec["sourceChunkIds"]),
                    ))
    except (OSError, ValueError, KeyError) as exc:
        raise CorruptIndex(nodes_path, str(exc)) from exc

    edges = []
    edges_path = index_dir / "edges.jsonl"
    try:
        with open(edges_path, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                edges.append(Edge(rec["src"], rec["dst"], rec["kind"], rec["weight"]))
    except (OSError, ValueError, KeyError) as exc:
        raise CorruptIndex(edges_path, str(exc)) from exc

    smi = _read_coo(index_dir / "smi.coo")
    omi = _read_coo(index_dir / "omi.coo")
    embedding_index = emb.load_index(index_dir / "embeddings", provider)

    graph = HeteroGraph(
        chunk_ids=chunk_ids,
        image_ids=image_ids,
        nodes=nodes,
        sentence_ids=list(embedding_index.matrices["sentence"].ids),
        object_ids=list(embedding_index.matrices["object"].ids),
        edges=edges,
        smi=smi,
        omi=omi,
        tau=manifest["tau"],
    )
    graph.chunk_index = {c: i for i, c in enumerate(chunk_ids)}
    graph.image_index = {i: j for j, i in enumerate(image_ids)}
    graph.node_index = {n.entity_key: i for i, n in enumerate(nodes)}

    counts = manifest["counts"]
    observed = {
        "chunks": graph.n_chunks,
        "images": graph.n_images,
        "multimodalNodes": len(nodes),
        "sentences": len(graph.sentence_ids),
        "objects": len(graph.object_ids),
        "edges": len(edges),
    }
    if observed != counts:
        raise CorruptIndex(index_dir, f"manifest counts {counts} != files {observed}")
    if smi.shape != (len(graph.sentence_ids), len(nodes)):
        raise CorruptIndex(index_dir / "smi.coo", f"shape {smi.shape} inconsistent")
    if omi.shape != (len(graph.object_ids), len(nodes)):
        raise CorruptIndex(index_dir / "omi.coo", f"shape {omi.shape} inconsistent")
    return LoadedIndex(graph, embedding_index, chunk_texts, manifest)


def build_from_corpus(corpus_dir, index_dir, config: RetrievalConfig, provider) -> dict:
    """End-to-end build command: corpus directory in, index directory out."""
    corpus = load_corpus(corpus_dir)
    graph, embedding_index, triplets = build_index_data(corpus, config, provider)
    return save_index(index_dir, graph, embedding_index, triplets, corpus.chunk_texts())
