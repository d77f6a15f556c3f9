"""Labeled document ingestion, multi-hot targets and truncation."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.data.tokenizer import Tokenizer
from src.knowledge.knowledge_base import IcdCode, KnowledgeBase, KnowledgeBaseError

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 8192
SPLITS = ("train", "dev", "test")

LabelSpace = Union[KnowledgeBase, Sequence[IcdCode]]


class CorpusError(Exception):
    """Exception for corpus loading and encoding errors."""

    def __init__(
        self,
        message: str,
        doc_id: Optional[str] = None,
        line: Optional[int] = None,
        code: Optional[str] = None,
    ):
        self.message = message
        self.doc_id = doc_id
        self.line = line
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class Document:
    """A medical text with its assigned codes."""

    id: str
    text: str
    codes: Tuple[IcdCode, ...]
    # code value -> (start_char, end_char) of a known evidence sentence
    evidence: Mapping[str, Tuple[int, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class EncodedExample:
    """Token ids and multi-hot labels of one document."""

    id: str
    token_ids: List[int]
    labels: np.ndarray


def _indexer(label_space: LabelSpace) -> Tuple[int, Callable[[IcdCode], int]]:
    if isinstance(label_space, KnowledgeBase):
        return len(label_space), label_space.index_of
    index = {code: i for i, code in enumerate(label_space)}

    def lookup(code: IcdCode) -> int:
        if code not in index:
            raise CorpusError(f"Code {code} is not in the label space", code=str(code))
        return index[code]

    return len(index), lookup


def multi_hot(codes: Sequence[IcdCode], label_space: LabelSpace) -> np.ndarray:
    """Binary label vector over the label space."""
    size, lookup = _indexer(label_space)
    labels = np.zeros(size, dtype=np.uint8)
    for code in codes:
        try:
            labels[lookup(code)] = 1
        except KnowledgeBaseError as e:
            raise CorpusError(e.message, code=e.code) from None
    return labels


def _parse_record(raw: object, kb: KnowledgeBase, line_no: int) -> Document:
    if not isinstance(raw, dict):
        raise CorpusError(f"Line {line_no}: expected a JSON object", line=line_no)
    doc_id, text, codes = raw.get("id"), raw.get("text"), raw.get("codes")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError(f"Line {line_no}: 'id' must be a non-empty string", line=line_no)
    if not isinstance(text, str):
        raise CorpusError(f"Line {line_no}: 'text' of {doc_id} must be a string", doc_id=doc_id, line=line_no)
    if not isinstance(codes, list) or not all(isinstance(c, str) for c in codes):
        raise CorpusError(
            f"Line {line_no}: 'codes' of {doc_id} must be a list of strings", doc_id=doc_id, line=line_no
        )

    resolved: List[IcdCode] = []
    for raw_code in codes:
        try:
            code = kb.resolve(raw_code)
        except KnowledgeBaseError:
            raise CorpusError(
                f"Line {line_no}: document {doc_id} has code {raw_code!r} absent from the knowledge base",
                doc_id=doc_id,
                line=line_no,
                code=raw_code,
            ) from None
        if code not in resolved:
            resolved.append(code)

    evidence: Dict[str, Tuple[int, int]] = {}
    for code_value, span in (raw.get("evidence") or {}).items():
        if not (isinstance(span, list) and len(span) == 2 and all(isinstance(x, int) for x in span)):
            raise CorpusError(
                f"Line {line_no}: evidence span of {code_value} in {doc_id} must be [start, end]",
                doc_id=doc_id,
                line=line_no,
            )
        evidence[code_value] = (span[0], span[1])

    return Document(id=doc_id, text=text, codes=tuple(resolved), evidence=evidence)


def load_corpus(path: Path, kb: KnowledgeBase) -> List[Document]:
    """Load a JSONL split, validating every code against the knowledge base.

    Args:
        path: JSONL file with ``id``, ``text``, ``codes`` per line
        kb: Knowledge base the codes must resolve in

    Returns:
        Documents in file order
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"Corpus file not found: {path}")

    documents: List[Document] = []
    seen: Dict[str, int] = {}
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"Line {line_no}: malformed JSON ({e.msg})", line=line_no) from None
            document = _parse_record(raw, kb, line_no)
            if document.id in seen:
                raise CorpusError(
                    f"Line {line_no}: duplicate document id {document.id} (first on line {seen[document.id]})",
                    doc_id=document.id,
                    line=line_no,
                )
            seen[document.id] = line_no
            documents.append(document)

    logger.info(f"Loaded {len(documents)} documents from {path}")
    return documents


def save_corpus(documents: Sequence[Document], path: Path) -> None:
    """Write documents as JSONL."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for document in documents:
            record = {
                "id": document.id,
                "text": document.text,
                "codes": [code.value for code in document.codes],
            }
            if document.evidence:
                record["evidence"] = {code: list(span) for code, span in document.evidence.items()}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def encode(
    document: Document,
    tokenizer: Tokenizer,
    label_space: LabelSpace,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> EncodedExample:
    """Tokenize with head truncation and build the multi-hot target."""
    token_ids = tokenizer.encode(document.text)
    if not token_ids:
        raise CorpusError(f"Document {document.id} is empty after tokenization", doc_id=document.id)
    return EncodedExample(
        id=document.id,
        token_ids=token_ids[:max_tokens],
        labels=multi_hot(document.codes, label_space),
    )


def encode_corpus(
    documents: Sequence[Document],
    tokenizer: Tokenizer,
    label_space: LabelSpace,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> List[EncodedExample]:
    """Encode a whole split."""
    return [encode(document, tokenizer, label_space, max_tokens) for document in documents]


def code_frequencies(documents: Sequence[Document], label_space: LabelSpace) -> np.ndarray:
    """Number of documents carrying each code."""
    size, lookup = _indexer(label_space)
    counts = np.zeros(size, dtype=np.int64)
    for document in documents:
        for code in document.codes:
            counts[lookup(code)] += 1
    return counts


def restrict_to_top_codes(
    kb: KnowledgeBase,
    splits: Mapping[str, Sequence[Document]],
    k: int,
) -> Tuple[KnowledgeBase, Dict[str, List[Document]]]:
    """Keep the k most frequent training codes and the documents still labeled.

    Ties in frequency are broken by label-space order.
    """
    frequencies = code_frequencies(splits["train"], kb)
    order = np.argsort(-frequencies, kind="stable")[:k]
    top_kb = kb.subset(kb.label_space[i] for i in order)

    restricted: Dict[str, List[Document]] = {}
    for name, documents in splits.items():
        restricted[name] = restrict_documents(documents, top_kb)
        logger.info(f"Top-{k} restriction kept {len(restricted[name])}/{len(documents)} {name} documents")
    return top_kb, restricted


def restrict_documents(documents: Sequence[Document], kb: KnowledgeBase) -> List[Document]:
    """Drop codes outside ``kb`` and the documents left without any code."""
    kept: List[Document] = []
    for document in documents:
        codes = tuple(code for code in document.codes if code in kb)
        if not codes:
            continue
        values = {code.value for code in codes}
        evidence = {c: span for c, span in document.evidence.items() if c in values}
        kept.append(Document(document.id, document.text, codes, evidence))
    return kept
