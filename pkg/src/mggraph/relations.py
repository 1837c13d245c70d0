"""Rule-based relation extraction over dependency-parsed sentences.

Two rule families, applied per entity pair in a fixed order:
verb-centric (predicate-centered, then adpositional with passive
correction), then noun-centric (appositive, then noun-adposition-noun).
The first matching rule wins for a pair.
"""

from __future__ import annotations

from .errors import MalformedTree
from .model import (
    EXCLUDED_ENTITY_LABELS,
    EntityMention,
    ParsedSentence,
    RelationTriplet,
)

SUBJECT_DEPS = {"nsubj", "csubj"}
OBJECT_DEPS = {"dobj", "attr"}
PASSIVE_SUBJECT = "nsubjpass"

# Preposition -> predicate map for noun-adposition-noun structures.
# Unknown prepositions fall back to "rel_" + lemma.
DEFAULT_PREPOSITION_MAP = {
    "in": "located_in",
    "at": "located_in",
    "of": "rel_of",
    "for": "rel_for",
}


def filter_relational_entities(entities) -> list[EntityMention]:
    """Drop mentions whose NER label carries no relational content."""
    return [e for e in entities if e.label not in EXCLUDED_ENTITY_LABELS]


def _check_tree(sentence: ParsedSentence) -> None:
    n = len(sentence.tokens)
    roots = 0
    for tok in sentence.tokens:
        if not 0 <= tok.head < n:
            raise MalformedTree(f"{sentence.sentence_id}: head {tok.head} out of range")
        if tok.head == tok.index:
            roots += 1
    if roots != 1:
        raise MalformedTree(f"{sentence.sentence_id}: expected 1 root, found {roots}")
    for tok in sentence.tokens:
        seen = set()
        i = tok.index
        while sentence.tokens[i].head != i:
            if i in seen:
                raise MalformedTree(f"{sentence.sentence_id}: head cycle at token {i}")
            seen.add(i)
            i = sentence.tokens[i].head


def _has_negation(tokens, verb_index: int) -> bool:
    return any(t.dep == "neg" and t.head == verb_index for t in tokens)


def _subtree(tokens, root_index: int) -> set[int]:
    members = {root_index}
    changed = True
    while changed:
        changed = False
        for t in tokens:
            if t.index not in members and t.head in members:
                members.add(t.index)
                changed = True
    return members


def verb_centric_rule(e1, e2, sentence: ParsedSentence) -> RelationTriplet | None:
    """Relations mediated by a verbal predicate, in active or passive voice."""
    tokens = sentence.tokens

    # (a) predicate-centered: subject and object share a VERB governor.
    for subj, obj in ((e1, e2), (e2, e1)):
        rs, ro = tokens[subj.root], tokens[obj.root]
        if (
            rs.dep in SUBJECT_DEPS
            and ro.dep in OBJECT_DEPS
            and rs.head == ro.head
            and tokens[rs.head].pos == "VERB"
        ):
            pred = tokens[rs.head].lemma.lower()
            if _has_negation(tokens, rs.head):
                pred = "not_" + pred
            return RelationTriplet(subj.key, pred, obj.key, sentence.sentence_id)

    # (b) adpositional: subject of a verb, other entity reached through an
    #     ADP under that verb; (c) nsubjpass + "by" inverts the roles.
    for subj, other in ((e1, e2), (e2, e1)):
        rs, ro = tokens[subj.root], tokens[other.root]
        if rs.dep not in SUBJECT_DEPS | {PASSIVE_SUBJECT}:
            continue
        verb = rs.head
        if tokens[verb].pos != "VERB":
            continue
        if ro.dep != "pobj":
            continue
        prep = tokens[ro.head]
        if prep.pos != "ADP" or prep.head != verb:
            continue
        pred = tokens[verb].lemma.lower()
        if _has_negation(tokens, verb):
            pred = "not_" + pred
        if rs.dep == PASSIVE_SUBJECT and prep.lemma.lower() == "by":
            # passive correction: reconstruct the active relation
            return RelationTriplet(other.key, pred, subj.key, sentence.sentence_id)
        pred = f"{pred}_{prep.lemma.lower()}"
        return RelationTriplet(subj.key, pred, other.key, sentence.sentence_id)

    return None


def noun_centric_rule(
    e1, e2, sentence: ParsedSentence, preposition_map=None
) -> RelationTriplet | None:
    """Fallback relations from nominal constructions with no governing verb."""
    if preposition_map is None:
        preposition_map = DEFAULT_PREPOSITION_MAP
    tokens = sentence.tokens

    # (a) appositive renaming, directly between the two entity roots.
    for a, b in ((e1, e2), (e2, e1)):
        rb = tokens[b.root]
        if rb.dep == "appos" and rb.head == a.root:
            return RelationTriplet(a.key, "is_also", b.key, sentence.sentence_id)

    # (a') appositive alias: the pair is connected through a non-entity
    #      appositive noun ("Paris, the capital of France" with entities
    #      Paris/France); the appositive itself becomes the object.
    entity_roots = {e1.root, e2.root}
    for a, b in ((e1, e2), (e2, e1)):
        for t in tokens:
            if t.dep != "appos" or t.head != a.root or t.index in entity_roots:
                continue
            if b.root in _subtree(tokens, t.index):
                alias = t.lemma.lower()
                if alias != a.key:
                    return RelationTriplet(a.key, "is_also", alias, sentence.sentence_id)

    # (b) noun-adposition-noun: the preposition carries the relation.
    for a, b in ((e1, e2), (e2, e1)):
        ra, rb = tokens[a.root], tokens[b.root]
        if ra.pos == "VERB":
            continue
        if rb.dep != "pobj":
            continue
        prep = tokens[rb.head]
        if prep.pos != "ADP" or prep.head != ra.index:
            continue
        lemma = prep.lemma.lower()
        pred = preposition_map.get(lemma, f"rel_{lemma}")
        return RelationTriplet(a.key, pred, b.key, sentence.sentence_id)

    return None


def extract_relations(
    sentence: ParsedSentence, preposition_map=None
) -> list[RelationTriplet]:
    """Extract at most one triplet per entity pair of one sentence."""
    _check_tree(sentence)
    entities = filter_relational_entities(sentence.entities)
    if len(entities) < 2:
        return []

    triplets: list[RelationTriplet] = []
    seen: set[tuple[str, str, str]] = set()
    for i in range(len(entities)):
        for j in range(i + 1, len(entities)):
            e1, e2 = entities[i], entities[j]
            if e1.key == e2.key:
                continue
            triplet = verb_centric_rule(e1, e2, sentence) or noun_centric_rule(
                e1, e2, sentence, preposition_map
            )
            if triplet is None or triplet.subject == triplet.object:
                continue
            ident = (triplet.subject, triplet.predicate, triplet.object)
            if ident not in seen:
                seen.add(ident)
                triplets.append(triplet)
    return triplets
