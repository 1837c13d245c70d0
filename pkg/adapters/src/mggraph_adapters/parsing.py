"""Dependency parse / NER export producing sentences.jsonl + entities.jsonl.

Two backends:

* SpacyBackend wraps an installed spaCy pipeline (the preferred path when
  a model such as en_core_web_trf is available).
* HeuristicBackend is a small deterministic rule-based tagger/parser with
  no model downloads.  It covers the constructions the downstream rule
  engine consumes (subject-verb-object, passives with "by", verb- and
  noun-attached prepositional phrases, appositives) and degrades to flat
  attachment elsewhere.  It exists so the pipeline runs in fully offline
  environments; swap in spaCy for real corpora.

Both backends expand a named entity to the neighbouring noun it modifies
as a compound ("Google" -> "Google headquarters"), so that nominal
relations keep their full subject phrase.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger("mggraph_adapters.parsing")

DETERMINERS = {"the", "a", "an", "this", "that", "these", "those"}
AUXILIARIES = {
    "is", "are", "was", "were", "be", "been", "being", "am",
    "do", "does", "did", "done",
    "has", "have", "had",
    "will", "would", "can", "could", "may", "might", "shall", "should", "must",
}
BE_FORMS = {"is", "are", "was", "were", "be", "been", "being", "am"}
PREPOSITIONS = {
    "in", "at", "of", "for", "by", "on", "with", "from", "to", "over",
    "under", "near", "about", "into", "through", "between", "across",
}
PRONOUNS = {"he", "she", "it", "they", "we", "i", "you", "who", "which"}
CONJUNCTIONS = {"and", "or", "but"}
ORDINAL_WORDS = {
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh",
    "eighth", "ninth", "tenth",
}
NUMBER_WORDS = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "hundred", "thousand", "million",
}

# Common verb stems; an -s/-es form only counts as a verb when its stem
# is listed, which keeps plural nouns like "headquarters" out.
VERB_STEMS = {
    "be", "have", "do", "say", "get", "make", "go", "know", "take", "see",
    "come", "think", "look", "want", "give", "use", "find", "found", "tell",
    "ask", "work", "seem", "feel", "try", "leave", "call", "operate", "run",
    "live", "believe", "hold", "bring", "happen", "write", "provide", "sit",
    "stand", "lose", "pay", "meet", "include", "continue", "set", "learn",
    "change", "lead", "understand", "watch", "follow", "stop", "create",
    "speak", "read", "allow", "add", "spend", "grow", "open", "walk", "win",
    "offer", "remember", "love", "consider", "appear", "buy", "wait",
    "serve", "die", "send", "expect", "build", "stay", "fall", "cut",
    "reach", "kill", "remain", "locate", "relate", "connect", "own",
    "acquire", "develop", "produce", "manage", "design", "launch",
    "release", "announce", "direct", "star", "contain", "represent",
    "describe", "establish", "employ", "manufacture", "sell", "ship",
    "move", "visit", "study", "teach", "play", "show", "name", "base",
}

IRREGULAR_LEMMAS = {
    "was": "be", "were": "be", "is": "be", "are": "be", "been": "be",
    "being": "be", "am": "be",
    "did": "do", "does": "do", "done": "do",
    "has": "have", "had": "have",
    "went": "go", "gone": "go",
    "said": "say", "made": "make", "took": "take", "taken": "take",
    "gave": "give", "given": "give", "got": "get", "gotten": "get",
    "held": "hold", "ran": "run", "came": "come", "saw": "see",
    "seen": "see", "knew": "know", "known": "know", "wrote": "write",
    "written": "write", "built": "build", "sold": "sell", "met": "meet",
    "led": "lead", "left": "leave", "won": "win", "grew": "grow",
    "grown": "grow", "bought": "buy", "sent": "send", "spoke": "speak",
    "spoken": "speak",
}

_PUNCT = ",.!?;:()\"'"
_NUMERIC = re.compile(r"^\d[\d.,]*$")
_ORDINAL_NUM = re.compile(r"^\d+(st|nd|rd|th)$", re.IGNORECASE)


@dataclass
class Token:
    index: int
    text: str
    lemma: str = ""
    pos: str = ""
    dep: str = "dep"
    head: int = 0


@dataclass
class Entity:
    start: int
    end: int
    surface: str
    label: str
    root: int


@dataclass
class Parse:
    tokens: list[Token]
    entities: list[Entity] = field(default_factory=list)


def verb_lemma(word: str) -> str:
    """Lemmatize a verb form with a small irregular table and suffix rules."""
    w = word.lower()
    if w in IRREGULAR_LEMMAS:
        return IRREGULAR_LEMMAS[w]
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("es") and w[:-2] in VERB_STEMS:
        return w[:-2]
    if w.endswith("s") and not w.endswith("ss") and w[:-1] in VERB_STEMS:
        return w[:-1]
    if w.endswith("ing") and len(w) > 5:
        stem = w[:-3]
        if stem in VERB_STEMS:
            return stem
        if stem + "e" in VERB_STEMS:
            return stem + "e"
        if len(stem) > 2 and stem[-1] == stem[-2]:  # running -> run
            return stem[:-1]
        return stem
    if w.endswith("ed") and len(w) > 3:
        stem = w[:-2]
        if stem in VERB_STEMS:
            return stem
        if stem + "e" in VERB_STEMS:
            return stem + "e"
        if len(stem) > 2 and stem[-1] == stem[-2]:  # stopped -> stop
            return stem[:-1]
        if w[:-1] in VERB_STEMS:  # founded -> found... handled above
            return w[:-1]
        return stem
    return w


class HeuristicBackend:
    """Deterministic rule-based tokenizer, tagger, parser, and NER."""

    name = "heuristic"

    def parse(self, text: str) -> list[Parse]:
        return [
            self._parse_sentence(raw)
            for raw in self._split_sentences(text)
            if raw.strip()
        ]

    @staticmethod
    def _split_sentences(text: str) -> list[str]:
        parts = re.split(r"(?<=[.!?])\s+", text.strip())
        return [p for p in parts if p]

    @staticmethod
    def _tokenize(sentence: str) -> list[str]:
        tokens = []
        for raw in sentence.split():
            head_punct, tail_punct = [], []
            while raw and raw[0] in _PUNCT:
                head_punct.append(raw[0])
                raw = raw[1:]
            while raw and raw[-1] in _PUNCT and not _ORDINAL_NUM.match(raw):
                tail_punct.append(raw[-1])
                raw = raw[:-1]
            tokens.extend(head_punct)
            if raw:
                tokens.append(raw)
            tokens.extend(reversed(tail_punct))
        return tokens

    def _tag(self, words: list[str]) -> list[Token]:
        tokens = [Token(i, w) for i, w in enumerate(words)]
        for i, tok in enumerate(tokens):
            w = tok.text
            lower = w.lower()
            if all(ch in _PUNCT for ch in w):
                tok.pos = "PUNCT"
            elif lower == "not" or lower == "n't":
                tok.pos = "PART"
            elif _NUMERIC.match(w) or lower in NUMBER_WORDS:
                tok.pos = "NUM"
            elif _ORDINAL_NUM.match(w) or lower in ORDINAL_WORDS:
                tok.pos = "ADJ"
            elif lower in DETERMINERS:
                tok.pos = "DET"
            elif lower in AUXILIARIES:
                tok.pos = "AUX"
            elif lower in PREPOSITIONS:
                tok.pos = "ADP"
            elif lower in PRONOUNS:
                tok.pos = "PRON"
            elif lower in CONJUNCTIONS:
                tok.pos = "CCONJ"
            elif w[0].isupper() and i > 0:
                tok.pos = "PROPN"
            elif w[0].isupper() and lower not in VERB_STEMS:
                # sentence-initial capitalized token: proper noun unless verbal
                tok.pos = "PROPN"
            else:
                tok.pos = "NOUN"  # provisional; verb pass below may retag
            tok.lemma = lower
        self._retag_verbs(tokens)
        for tok in tokens:
            if tok.pos == "VERB":
                tok.lemma = verb_lemma(tok.text)
            elif tok.pos == "AUX":
                tok.lemma = IRREGULAR_LEMMAS.get(tok.lemma, tok.lemma)
        return tokens

    @staticmethod
    def _is_verb_form(word: str) -> bool:
        w = word.lower()
        if w in VERB_STEMS or w in IRREGULAR_LEMMAS:
            return True
        if w.endswith(("ed", "ing")) and len(w) > 3:
            return True
        if w.endswith(("s", "es")) and verb_lemma(w) in VERB_STEMS:
            return True
        return False

    def _retag_verbs(self, tokens: list[Token]) -> None:
        seen_nominal = False
        for i, tok in enumerate(tokens):
            if tok.pos in ("NOUN", "PROPN", "PRON", "NUM"):
                seen_nominal = True
            after_aux = i > 0 and tokens[i - 1].pos in ("AUX", "PART")
            if tok.pos == "NOUN" and (after_aux or seen_nominal) \
                    and self._is_verb_form(tok.text):
                tok.pos = "VERB"
                seen_nominal = False

    @staticmethod
    def _noun_phrases(tokens: list[Token]) -> list[tuple[int, int]]:
        spans = []
        start = None
        for tok in tokens:
            if tok.pos in ("DET", "ADJ", "NUM", "NOUN", "PROPN"):
                if start is None:
                    start = tok.index
            else:
                if start is not None:
                    spans.append((start, tok.index - 1))
                    start = None
        if start is not None:
            spans.append((start, tokens[-1].index))
        return spans

    def _parse_sentence(self, raw: str) -> Parse:
        words = self._tokenize(raw)
        if not words:
            return Parse(tokens=[])
        tokens = self._tag(words)
        noun_phrases = self._noun_phrases(tokens)
        np_heads = {}
        for start, end in noun_phrases:
            head = end
            np_heads[(start, end)] = head
            for i in range(start, end):
                tokens[i].dep = "det" if tokens[i].pos == "DET" else "compound"
                tokens[i].head = head

        main_verb = next((t.index for t in tokens if t.pos == "VERB"), None)

        if main_verb is not None:
            root = main_verb
            passive = self._is_passive(tokens, main_verb)
            subject_assigned = False
            for start, end in noun_phrases:
                head = np_heads[(start, end)]
                if head < main_verb and not subject_assigned:
                    tokens[head].dep = "nsubjpass" if passive else "nsubj"
                    tokens[head].head = main_verb
                    subject_assigned = True
                elif head < main_verb:
                    tokens[head].dep = "dep"
                    tokens[head].head = main_verb
            for tok in tokens:
                if tok.pos == "AUX" and tok.index < main_verb:
                    tok.dep = ("auxpass" if passive and tok.lemma in BE_FORMS
                               else "aux")
                    tok.head = main_verb
                elif tok.pos == "PART":
                    tok.dep = "neg"
                    tok.head = main_verb
        else:
            root = np_heads[noun_phrases[0]] if noun_phrases else 0

        self._attach_prepositions(tokens, noun_phrases, np_heads, main_verb)
        if main_verb is None and noun_phrases:
            self._attach_appositives(tokens, noun_phrases, np_heads, root)

        if main_verb is not None:
            self._attach_objects(tokens, noun_phrases, np_heads, main_verb)

        # root and leftovers
        tokens[root].dep = "ROOT"
        tokens[root].head = root
        for tok in tokens:
            if tok.index != root and tok.head == tok.index:
                tok.head = root
            if tok.pos == "PUNCT" and tok.dep == "dep":
                tok.dep = "punct"
                tok.head = root
        self._break_cycles(tokens, root)

        entities = self._entities(tokens)
        return Parse(tokens=tokens, entities=entities)

    @staticmethod
    def _break_cycles(tokens: list[Token], root: int) -> None:
        """Reattach any token whose head chain never reaches the root."""
        for tok in tokens:
            seen = set()
            i = tok.index
            while tokens[i].head != i:
                if i in seen:
                    tok.head = root
                    tok.dep = "dep"
                    break
                seen.add(i)
                i = tokens[i].head

    @staticmethod
    def _is_passive(tokens: list[Token], verb: int) -> bool:
        has_be = any(
            t.pos == "AUX" and t.lemma in BE_FORMS and t.index < verb
            for t in tokens
        )
        has_by = any(t.lemma == "by" for t in tokens if t.index > verb)
        participle = tokens[verb].text.lower().endswith(("ed", "en"))
        return has_be and participle and has_by

    @staticmethod
    def _attach_prepositions(tokens, noun_phrases, np_heads, main_verb):
        np_head_set = set(np_heads.values())
        for tok in tokens:
            if tok.pos != "ADP":
                continue
            # attach to the nearest preceding verb or noun-phrase head
            governor = None
            for j in range(tok.index - 1, -1, -1):
                if tokens[j].pos == "VERB" or j in np_head_set:
                    governor = j
                    break
            if governor is None:
                continue
            is_agent = (
                tok.lemma == "by"
                and main_verb is not None
                and governor == main_verb
            )
            tok.dep = "agent" if is_agent else "prep"
            tok.head = governor
            # first NP after the preposition becomes its object
            for start, end in noun_phrases:
                if start > tok.index:
                    head = np_heads[(start, end)]
                    tokens[head].dep = "pobj"
                    tokens[head].head = tok.index
                    break

    @staticmethod
    def _attach_objects(tokens, noun_phrases, np_heads, main_verb):
        for start, end in noun_phrases:
            head = np_heads[(start, end)]
            if head <= main_verb:
                continue
            between = tokens[main_verb + 1:start]
            if any(t.pos in ("ADP", "VERB") for t in between):
                break
            if tokens[head].dep in ("compound", "det", "dep") or tokens[head].head == head:
                tokens[head].dep = "dobj"
                tokens[head].head = main_verb
            break

    @staticmethod
    def _attach_appositives(tokens, noun_phrases, np_heads, root):
        root_np = next(
            (span for span in noun_phrases if np_heads[span] == root), None)
        if root_np is None:
            return
        for start, end in noun_phrases:
            if start <= root_np[1]:
                continue
            head = np_heads[(start, end)]
            between = tokens[root_np[1] + 1:start]
            if any(t.text == "," for t in between) and tokens[head].dep not in ("pobj",):
                tokens[head].dep = "appos"
                tokens[head].head = root
            break

    def _entities(self, tokens: list[Token]) -> list[Entity]:
        entities = []
        i = 0
        n = len(tokens)
        while i < n:
            tok = tokens[i]
            if tok.pos == "NUM":
                label = "PERCENT" if i + 1 < n and tokens[i + 1].text == "%" else "CARDINAL"
                end = i + 1 if label == "PERCENT" else i
                entities.append(self._make_entity(tokens, i, end, label))
                i = end + 1
                continue
            if _ORDINAL_NUM.match(tok.text) or tok.lemma in ORDINAL_WORDS:
                entities.append(self._make_entity(tokens, i, i, "ORDINAL"))
                i += 1
                continue
            if tok.pos == "PROPN":
                start = i
                while i + 1 < n and tokens[i + 1].pos == "PROPN":
                    i += 1
                end = i
                # compound expansion: include the noun this span modifies
                root = end
                if (
                    end + 1 < n
                    and tokens[end + 1].pos == "NOUN"
                    and tokens[end].dep == "compound"
                    and tokens[end].head == end + 1
                ):
                    end += 1
                    root = end
                entities.append(
                    self._make_entity(tokens, start, end, "ENT", root=root))
                i = end + 1
                continue
            i += 1
        return entities

    @staticmethod
    def _make_entity(tokens, start, end, label, root=None):
        surface = " ".join(tokens[i].text for i in range(start, end + 1))
        if root is None:
            root = end
        return Entity(start=start, end=end, surface=surface, label=label, root=root)


class SpacyBackend:
    """Wraps an installed spaCy pipeline (requires the model to be present)."""

    name = "spacy"

    def __init__(self, model: str = "en_core_web_trf"):
        try:
            import spacy
        except ImportError as exc:
            raise RuntimeError(
                "spaCy is not installed; install mggraph-adapters[spacy] "
                "or use the heuristic backend"
            ) from exc
        try:
            self.nlp = spacy.load(model)
        except OSError as exc:
            raise RuntimeError(f"cannot load spaCy model {model!r}: {exc}") from exc

    def parse(self, text: str) -> list[Parse]:
        doc = self.nlp(text)
        parses = []
        for sent in doc.sents:
            offset = sent.start
            tokens = [
                Token(
                    index=t.i - offset,
                    text=t.text,
                    lemma=t.lemma_.lower(),
                    pos=t.pos_,
                    dep="ROOT" if t.head.i == t.i else t.dep_,
                    head=t.head.i - offset,
                )
                for t in sent
            ]
            entities = []
            for ent in doc.ents:
                if ent.start < sent.start or ent.end > sent.end:
                    continue
                start, end = ent.start - offset, ent.end - 1 - offset
                root = ent.root.i - offset
                # compound expansion to the governing noun, as above
                head_tok = ent.root.head
                if (
                    ent.root.dep_ == "compound"
                    and head_tok.pos_ == "NOUN"
                    and head_tok.i == ent.end
                ):
                    end = head_tok.i - offset
                    root = end
                surface = " ".join(tokens[i].text for i in range(start, end + 1))
                entities.append(Entity(start, end, surface, ent.label_, root))
            parses.append(Parse(tokens=tokens, entities=entities))
        return parses


def make_backend(name: str, model: str = "en_core_web_trf"):
    if name == "heuristic":
        return HeuristicBackend()
    if name == "spacy":
        return SpacyBackend(model)
    raise ValueError(f"unknown parser backend {name!r}")


def _write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_docs(path) -> list[dict]:
    """Read raw documents: one JSON object per line with docId and text."""
    docs = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for field_name in ("docId", "text"):
                if not isinstance(rec.get(field_name), str) or not rec[field_name]:
                    raise ValueError(
                        f"{path}:{lineno}: missing or empty field {field_name!r}")
            if rec["docId"] in seen_ids:
                raise ValueError(f"{path}:{lineno}: duplicate docId {rec['docId']!r}")
            seen_ids.add(rec["docId"])
            image_ids = rec.get("imageIds", [])
            if not isinstance(image_ids, list) or not all(
                    isinstance(i, str) for i in image_ids):
                raise ValueError(f"{path}:{lineno}: imageIds must be a string list")
            docs.append({"docId": rec["docId"], "text": rec["text"],
                         "imageIds": image_ids})
    return docs


def export_parses(docs, out_dir, backend) -> dict:
    """Parse raw documents and write the corpus ingestion files.

    One chunk per document.  Documents the backend cannot parse are
    skipped with a logged warning rather than failing the whole export.
    Returns a summary with document, sentence, and entity counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    chunk_records, sentence_records, entity_records = [], [], []
    image_ids: list[str] = []
    seen_images = set()
    skipped = 0

    for doc in docs:
        doc_id = doc["docId"]
        try:
            parses = backend.parse(doc["text"])
        except Exception as exc:
            logger.warning("skipping %s: parse failed: %s", doc_id, exc)
            skipped += 1
            continue
        parses = [p for p in parses if p.tokens]
        if not parses:
            logger.warning("skipping %s: no sentences produced", doc_id)
            skipped += 1
            continue

        sentence_ids = []
        for k, parse in enumerate(parses):
            sid = f"{doc_id}-s{k}"
            sentence_ids.append(sid)
            sentence_records.append({
                "sentenceId": sid,
                "chunkId": doc_id,
                "tokens": [
                    {"index": t.index, "text": t.text, "lemma": t.lemma,
                     "pos": t.pos, "dep": t.dep, "head": t.head}
                    for t in parse.tokens
                ],
            })
            for ent in parse.entities:
                entity_records.append({
                    "sentenceId": sid, "start": ent.start, "end": ent.end,
                    "surface": ent.surface, "label": ent.label,
                    "rootIndex": ent.root,
                })
        chunk_records.append({
            "chunkId": doc_id, "text": doc["text"],
            "sentenceIds": sentence_ids, "imageIds": doc["imageIds"],
        })
        for img in doc["imageIds"]:
            if img not in seen_images:
                seen_images.add(img)
                image_ids.append(img)

    _write_jsonl(out_dir / "chunks.jsonl", chunk_records)
    _write_jsonl(out_dir / "sentences.jsonl", sentence_records)
    _write_jsonl(out_dir / "entities.jsonl", entity_records)
    _write_jsonl(out_dir / "images.jsonl", [{"imageId": i} for i in image_ids])

    summary = {
        "docs": len(chunk_records),
        "skipped": skipped,
        "sentences": len(sentence_records),
        "entities": len(entity_records),
        "images": len(image_ids),
    }
    logger.info("exported %(docs)d docs (%(skipped)d skipped), "
                "%(sentences)d sentences, %(entities)d entities", summary)
    return summary
