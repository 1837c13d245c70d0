"""Heterogeneous graph assembly: entity/object fusion, typed edges, incidence.

Global node index order is chunks, then images, then multimodal nodes.
Edges are undirected: stored once, traversed both ways.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import scipy.sparse as sp

from .errors import DanglingReference
from .model import (
    ChunkRecord,
    GroundingRecord,
    MultimodalNode,
    ParsedSentence,
    RelationTriplet,
)
from .relations import filter_relational_entities

CONTEXTUAL = "contextual"
SEMANTIC = "semantic"
GROUNDING = "grounding"

DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str
    weight: float


@dataclass
class HeteroGraph:
    chunk_ids: list[str]
    image_ids: list[str]
    nodes: list[MultimodalNode]          # multimodal partition, index order
    sentence_ids: list[str]              # row order of smi
    object_ids: list[str]                # row order of omi
    edges: list[Edge]
    smi: sp.csr_matrix                   # |S| x |V_M|
    omi: sp.csr_matrix                   # |V_O| x |V_M|
    tau: float = DEFAULT_TAU
    chunk_index: dict[str, int] = field(default_factory=dict)
    image_index: dict[str, int] = field(default_factory=dict)
    node_index: dict[str, int] = field(default_factory=dict)  # entity key -> mm offset

    @property
    def n_chunks(self) -> int:
        return len(self.chunk_ids)

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    @property
    def n_nodes(self) -> int:
        return self.n_chunks + self.n_images + len(self.nodes)

    def image_offset(self, image_id: str) -> int:
        return self.n_chunks + self.image_index[image_id]

    def mm_offset(self, entity_key: str) -> int:
        return self.n_chunks + self.n_images + self.node_index[entity_key]


def ground_entities(
    groundings: list[GroundingRecord], tau: float
) -> dict[str, set[str]]:
    """Group surviving object ids by entity key; strictly confidence > tau."""
    grounded: dict[str, set[str]] = {}
    for rec in groundings:
        if rec.confidence > tau:
            grounded.setdefault(rec.entity_key, set()).add(rec.object_id)
    return grounded


def fuse_multimodal_nodes(
    chunks: list[ChunkRecord],
    sentences: list[ParsedSentence],
    grounded: dict[str, set[str]],
    strict_grounded_nodes: bool = False,
) -> list[MultimodalNode]:
    """One node per canonical relational entity key, corpus-wide.

    Nodes are ordered by first-appearance chunk order, then key.  With
    strict_grounded_nodes, entities without surviving detections are dropped.
    """
    chunk_order = {c.chunk_id: i for i, c in enumerate(chunks)}
    first_seen: dict[str, int] = {}
    chunks_of: dict[str, set[str]] = {}
    for sent in sentences:
        order = chunk_order.get(sent.chunk_id)
        if order is None:
            raise DanglingReference(f"sentence {sent.sentence_id}: unknown chunk {sent.chunk_id}")
        for mention in filter_relational_entities(sent.entities):
            key = mention.key
            if key not in first_seen or order < first_seen[key]:
                first_seen[key] = order
            chunks_of.setdefault(key, set()).add(sent.chunk_id)

    keys = sorted(first_seen, key=lambda k: (first_seen[k], k))
    nodes = []
    for i, key in enumerate(keys):
        object_ids = set(grounded.get(key, set()))
        if strict_grounded_nodes and not object_ids:
            continue
        nodes.append(
            MultimodalNode(
                node_id=f"mm:{len(nodes)}",
                entity_key=key,
                object_ids=object_ids,
                source_chunk_ids=chunks_of[key],
            )
        )
    return nodes


def _image_order(chunks: list[ChunkRecord], image_ids: list[str]) -> list[str]:
    # first appearance across chunks, then any unreferenced images in file order
    ordered: list[str] = []
    seen: set[str] = set()
    known = set(image_ids)
    for chunk in chunks:
        for image_id in chunk.image_ids:
            if image_id not in known:
                raise DanglingReference(f"chunk {chunk.chunk_id}: unknown image {image_id}")
            if image_id not in seen:
                seen.add(image_id)
                ordered.append(image_id)
    ordered.extend(i for i in image_ids if i not in seen)
    return ordered


def build_graph(
    chunks: list[ChunkRecord],
    sentences: list[ParsedSentence],
    triplets: list[RelationTriplet],
    image_ids: list[str],
    groundings: list[GroundingRecord],
    tau: float = DEFAULT_TAU,
    strict_grounded_nodes: bool = False,
) -> HeteroGraph:
    """Assemble the full heterogeneous graph from ingestion artifacts."""
    grounded = ground_entities(groundings, tau)
    nodes = fuse_multimodal_nodes(chunks, sentences, grounded, strict_grounded_nodes)

    graph = HeteroGraph(
        chunk_ids=[c.chunk_id for c in chunks],
        image_ids=_image_order(chunks, image_ids),
        nodes=nodes,
        sentence_ids=[],
        object_ids=[],
        edges=[],
        smi=sp.csr_matrix((0, len(nodes))),
        omi=sp.csr_matrix((0, len(nodes))),
        tau=tau,
    )
    graph.chunk_index = {c: i for i, c in enumerate(graph.chunk_ids)}
    graph.image_index = {i: j for j, i in enumerate(graph.image_ids)}
    graph.node_index = {n.entity_key: i for i, n in enumerate(nodes)}

    graph.edges = build_edges(graph, chunks, triplets, groundings)
    graph.sentence_ids, graph.object_ids, graph.smi, graph.omi = build_incidence(
        graph, chunks, sentences, groundings
    )
    return graph


def build_edges(
    graph: HeteroGraph,
    chunks: list[ChunkRecord],
    triplets: list[RelationTriplet],
    groundings: list[GroundingRecord],
) -> list[Edge]:
    """Contextual, semantic, and grounding edges; no duplicate (src, dst, kind)."""
    weights: dict[tuple[int, int, str], float] = {}

    def put(a: int, b: int, kind: str, weight: float) -> None:
        if a == b:
            return
        key = (min(a, b), max(a, b), kind)
        if kind == GROUNDING:
            # duplicate grounding of one pair collapses to max confidence
            weights[key] = max(weights.get(key, 0.0), weight)
        else:
            weights[key] = weight

    entity_chunks = {
        node.entity_key: node.source_chunk_ids for node in graph.nodes
    }
    for chunk in chunks:
        c = graph.chunk_index[chunk.chunk_id]
        for image_id in chunk.image_ids:
            put(c, graph.image_offset(image_id), CONTEXTUAL, 1.0)
    for key, chunk_ids in entity_chunks.items():
        m = graph.mm_offset(key)
        for chunk_id in chunk_ids:
            if chunk_id not in graph.chunk_index:
                raise DanglingReference(f"entity {key}: unknown chunk {chunk_id}")
            put(graph.chunk_index[chunk_id], m, CONTEXTUAL, 1.0)

    for triplet in triplets:
        a = graph.node_index.get(triplet.subject)
        b = graph.node_index.get(triplet.object)
        if a is None or b is None or a == b:
            # triplet endpoints that never became nodes carry no edge
            continue
        put(
            graph.n_chunks + graph.n_images + a,
            graph.n_chunks + graph.n_images + b,
            SEMANTIC,
            1.0,
        )

    object_owner = {
        obj: node.entity_key for node in graph.nodes for obj in node.object_ids
    }
    for rec in groundings:
        owner = object_owner.get(rec.object_id)
        if owner is None:
            continue  # below tau, or its entity was dropped in strict mode
        if rec.image_id not in graph.image_index:
            raise DanglingReference(f"grounding {rec.object_id}: unknown image {rec.image_id}")
        put(graph.mm_offset(owner), graph.image_offset(rec.image_id), GROUNDING, rec.confidence)

    return [
        Edge(src, dst, kind, weight)
        for (src, dst, kind), weight in sorted(weights.items())
    ]


def build_incidence(
    graph: HeteroGraph,
    chunks: list[ChunkRecord],
    sentences: list[ParsedSentence],
    groundings: list[GroundingRecord],
):
    """Sentence- and object-to-multimodal incidence matrices (binary, sparse)."""
    sentence_by_id = {s.sentence_id: s for s in sentences}
    sentence_ids: list[str] = []
    for chunk in chunks:
        for sid in chunk.sentence_ids:
            if sid not in sentence_by_id:
                raise DanglingReference(f"chunk {chunk.chunk_id}: unknown sentence {sid}")
            sentence_ids.append(sid)

    n_mm = len(graph.nodes)
    rows, cols = [], []
    for i, sid in enumerate(sentence_ids):
        mentioned = set()
        for mention in filter_relational_entities(sentence_by_id[sid].entities):
            j = graph.node_index.get(mention.key)
            if j is not None:
                mentioned.add(j)
        for j in sorted(mentioned):
            rows.append(i)
            cols.append(j)
    smi = sp.csr_matrix(
        ([1.0] * len(rows), (rows, cols)), shape=(len(sentence_ids), n_mm)
    )

    # objects ordered by owning node index, then object id
    owner_of = {
        obj: j for j, node in enumerate(graph.nodes) for obj in node.object_ids
    }
    object_ids = sorted(owner_of, key=lambda o: (owner_of[o], o))
    orows = list(range(len(object_ids)))
    ocols = [owner_of[o] for o in object_ids]
    omi = sp.csr_matrix(
        ([1.0] * len(object_ids), (orows, ocols)), shape=(len(object_ids), n_mm)
    )
    return sentence_ids, object_ids, smi, omi
