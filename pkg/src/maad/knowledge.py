"""Architectural knowledge store: chunking, a hash-based reference embedder, retrieval.

Documents from the three source kinds (design cases, literature, expert
transcripts) are chunked at paragraph boundaries, embedded, and retrieved by
cosine similarity with per-role filtering. The reference embedder is a
deterministic token-hash bag; production embedders plug in behind the same
vector contract (dimension recorded in the index metadata). Retrieval is an
exhaustive linear scan: determinism over speed at desk scale.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from maad.common import EmptyDocument, EmptyText, IndexUnavailable, NoRoleTags, RoleName

__all__ = [
    "DIMENSION",
    "EMBEDDER_NAME",
    "KnowledgeBase",
    "KnowledgeChunk",
    "SearchResult",
    "SourceKind",
    "embed",
    "fnv1a64",
    "split_document",
    "tokenize",
]

DIMENSION = 64
EMBEDDER_NAME = "fnv1a64-bag-64"
MAX_CHUNK_WORDS = 200

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?]) ")
_PARAGRAPH_SPLIT_RE = re.compile(r"\n\s*\n")


class SourceKind(str, Enum):
    DESIGN_CASE = "design_case"
    LITERATURE = "literature"
    EXPERT = "expert"


@dataclass(frozen=True)
class KnowledgeChunk:
    chunk_id: str
    text: str
    source_kind: SourceKind
    role_tags: frozenset[RoleName]
    doc_id: str
    ordinal: int

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "text": self.text,
            "source_kind": self.source_kind.value,
            "role_tags": sorted(r.value for r in self.role_tags),
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
        }

    @classmethod
    def from_dict(cls, data: dict) -> KnowledgeChunk:
        return cls(
            chunk_id=data["chunk_id"],
            text=data["text"],
            source_kind=SourceKind(data["source_kind"]),
            role_tags=frozenset(RoleName(r) for r in data["role_tags"]),
            doc_id=data["doc_id"],
            ordinal=int(data["ordinal"]),
        )


@dataclass(frozen=True)
class SearchResult:
    chunk_id: str
    score: float


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def tokenize(text: str) -> list[str]:
    """Lowercased maximal ASCII-alphanumeric runs."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def embed(text: str) -> np.ndarray:
    """Reference embedder: token counts bucketed by FNV-1a hash, L2-normalized.

    Returns a unit-norm float32 vector of DIMENSION components. Raises EmptyText
    when the input has no alphanumeric token.
    """
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText("text contains no alphanumeric token")
    counts = np.zeros(DIMENSION, dtype=np.float64)
    for token in tokens:
        counts[fnv1a64(token.encode("utf-8")) % DIMENSION] += 1.0
    return (counts / np.linalg.norm(counts)).astype(np.float32)


def _word_count(text: str) -> int:
    return len(text.split())


def _split_long_paragraph(paragraph: str) -> list[str]:
    """Greedy sentence packing; a lone over-long sentence is word-split."""
    sentences = [s for s in _SENTENCE_SPLIT_RE.split(paragraph) if s.strip()]
    pieces: list[str] = []
    current: list[str] = []
    current_words = 0
    for sentence in sentences:
        n = _word_count(sentence)
        if current and current_words + n > MAX_CHUNK_WORDS:
            pieces.append(" ".join(current))
            current, current_words = [], 0
        current.append(sentence)
        current_words += n
    if current:
        pieces.append(" ".join(current))
    out: list[str] = []
    for piece in pieces:
        words = piece.split()
        if len(words) <= MAX_CHUNK_WORDS:
            out.append(piece.strip())
        else:
            for i in range(0, len(words), MAX_CHUNK_WORDS):
                out.append(" ".join(words[i : i + MAX_CHUNK_WORDS]))
    return out


def split_document(text: str) -> list[str]:
    """Chunk plan: paragraphs merged greedily up to MAX_CHUNK_WORDS words each.

    Paragraphs are blank-line separated. Consecutive paragraphs merge while the
    running total stays within the limit; a single over-long paragraph is split
    greedily at sentence boundaries.
    """
    paragraphs = [p.strip() for p in _PARAGRAPH_SPLIT_RE.split(text) if p.strip()]
    chunks: list[str] = []
    current: list[str] = []
    current_words = 0
    for paragraph in paragraphs:
        n = _word_count(paragraph)
        if n > MAX_CHUNK_WORDS:
            if current:
                chunks.append("\n\n".join(current))
                current, current_words = [], 0
            chunks.extend(_split_long_paragraph(paragraph))
            continue
        if current and current_words + n > MAX_CHUNK_WORDS:
            chunks.append("\n\n".join(current))
            current, current_words = [], 0
        current.append(paragraph)
        current_words += n
    if current:
        chunks.append("\n\n".join(current))
    return chunks


class KnowledgeBase:
    """Build-then-read chunk index: ingestion is exclusive, reads are concurrent."""

    def __init__(self, embedder: Callable[[str], np.ndarray] = embed, dimension: int = DIMENSION,
                 embedder_name: str = EMBEDDER_NAME) -> None:
        self._embedder = embedder
        self.dimension = dimension
        self.embedder_name = embedder_name
        self.chunks: list[KnowledgeChunk] = []
        self._vectors: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None
        self._doc_count = 0

    @property
    def count(self) -> int:
        return len(self.chunks)

    def ingest(self, document_text: str, source_kind: SourceKind | str,
               role_tags: Iterable[RoleName | str]) -> list[str]:
        """Chunk, embed, and store one document; returns chunk ids in document order."""
        if not document_text or not document_text.strip():
            raise EmptyDocument("document text is empty")
        tags = frozenset(RoleName(r) for r in role_tags)
        if not tags:
            raise NoRoleTags("at least one role tag is required")
        kind = SourceKind(source_kind)
        texts = split_document(document_text)
        self._doc_count += 1
        doc_id = f"doc-{self._doc_count:04d}"
        ids: list[str] = []
        for ordinal, text in enumerate(texts):
            chunk = KnowledgeChunk(f"{doc_id}:{ordinal:04d}", text, kind, tags, doc_id, ordinal)
            self.chunks.append(chunk)
            self._vectors.append(self._embedder(text))
            ids.append(chunk.chunk_id)
        self._matrix = None
        return ids

    def _matrix_view(self) -> np.ndarray:
        if self._matrix is None:
            if self._vectors:
                self._matrix = np.vstack(self._vectors)
            else:
                self._matrix = np.zeros((0, self.dimension), dtype=np.float32)
        return self._matrix

    def search(self, query_text: str, role: RoleName | str, k: int) -> list[SearchResult]:
        """Top-k cosine matches among chunks tagged for `role`.

        Descending score; ties broken by ascending ingest order. Scores are
        clamped to [0, 1] (component vectors are non-negative).
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        role = RoleName(role)
        query = self._embedder(query_text)
        candidates = [i for i, c in enumerate(self.chunks) if role in c.role_tags]
        if not candidates:
            return []
        matrix = self._matrix_view()
        scores = matrix[candidates] @ query
        order = sorted(range(len(candidates)), key=lambda j: (-float(scores[j]), candidates[j]))
        out: list[SearchResult] = []
        for j in order[:k]:
            score = min(1.0, max(0.0, float(scores[j])))
            out.append(SearchResult(self.chunks[candidates[j]].chunk_id, score))
        return out

    def search_chunks(self, query_text: str, role: RoleName | str, k: int) -> list[KnowledgeChunk]:
        by_id = {c.chunk_id: c for c in self.chunks}
        return [by_id[r.chunk_id] for r in self.search(query_text, role, k)]

    def get_chunk(self, chunk_id: str) -> KnowledgeChunk | None:
        for chunk in self.chunks:
            if chunk.chunk_id == chunk_id:
                return chunk
        return None

    def save(self, directory: str | Path) -> None:
        """Persist atomically: readers never observe a partially written index."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        chunk_lines = "\n".join(json.dumps(c.to_dict(), sort_keys=True, ensure_ascii=False) for c in self.chunks)
        matrix = self._matrix_view().astype("<f4")
        meta = {
            "dimension": self.dimension,
            "count": self.count,
            "embedder": self.embedder_name,
            "doc_count": self._doc_count,
        }
        for name, payload in [
            ("chunks.jsonl", (chunk_lines + "\n" if chunk_lines else "").encode("utf-8")),
            ("vectors.dat", matrix.tobytes(order="C")),
            ("meta.json", (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode("utf-8")),
        ]:
            tmp = directory / (name + ".tmp")
            tmp.write_bytes(payload)
            os.replace(tmp, directory / name)

    @classmethod
    def load(cls, directory: str | Path, embedder: Callable[[str], np.ndarray] = embed) -> KnowledgeBase:
        directory = Path(directory)
        meta_path = directory / "meta.json"
        if not meta_path.exists():
            raise IndexUnavailable(f"no index at {directory}")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            kb = cls(embedder=embedder, dimension=int(meta["dimension"]), embedder_name=str(meta["embedder"]))
            kb._doc_count = int(meta.get("doc_count", 0))
            raw = (directory / "chunks.jsonl").read_text(encoding="utf-8")
            for line in raw.splitlines():
                if line.strip():
                    kb.chunks.append(KnowledgeChunk.from_dict(json.loads(line)))
            data = np.frombuffer((directory / "vectors.dat").read_bytes(), dtype="<f4")
            matrix = data.reshape(len(kb.chunks), kb.dimension) if len(kb.chunks) else np.zeros((0, kb.dimension), "<f4")
        except (OSError, ValueError, KeyError) as exc:
            raise IndexUnavailable(f"corrupt index at {directory}: {exc}") from exc
        kb._vectors = [matrix[i] for i in range(matrix.shape[0])]
        kb._matrix = None
        if kb._doc_count == 0 and kb.chunks:
            kb._doc_count = len({c.doc_id for c in kb.chunks})
        return kb
