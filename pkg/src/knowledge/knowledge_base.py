"""Per-code knowledge: descriptions, synonym sets and hierarchy chains."""

import logging
import random
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

DIAGNOSIS_PATTERN = re.compile(r"^[0-9EV][0-9]{1,3}(\.[0-9]{1,2})?$")
PROCEDURE_PATTERN = re.compile(r"^[0-9]{2}(\.[0-9]{1,2})?$")

_NOS_TOKEN = re.compile(r"(?<!\w)nos(?!\w)", re.IGNORECASE)
_REPEATED_SEPARATORS = re.compile(r"\s*([,;])(?:\s*[,;])+")
_SPACE_BEFORE_SEPARATOR = re.compile(r"\s+([,;])")
_WHITESPACE = re.compile(r"\s+")

COLUMN_DELIMITER = "|"
ITEM_DELIMITER = ";"
RANGE_DELIMITER = ":"


class KnowledgeBaseError(Exception):
    """Exception for knowledge base loading and lookup errors."""

    def __init__(self, message: str, code: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.code = code
        self.line = line
        super().__init__(message)


class CodeKind(str, Enum):
    """ICD-9 code family."""

    DIAGNOSIS = "diagnosis"
    PROCEDURE = "procedure"


@dataclass(frozen=True, order=True)
class IcdCode:
    """A validated ICD-9 code value."""

    value: str
    kind: CodeKind

    @classmethod
    def parse(cls, raw: str) -> "IcdCode":
        """Trim and validate a raw code string.

        Two digits before the optional dot read as a procedure code, anything
        else matching the diagnosis pattern reads as a diagnosis code.
        """
        value = raw.strip() if isinstance(raw, str) else ""
        if PROCEDURE_PATTERN.match(value):
            return cls(value, CodeKind.PROCEDURE)
        if DIAGNOSIS_PATTERN.match(value):
            return cls(value, CodeKind.DIAGNOSIS)
        raise KnowledgeBaseError(f"Invalid ICD-9 code: {raw!r}", code=str(raw))

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CodeEntry:
    """Knowledge attached to one code."""

    code: IcdCode
    description: str
    synonyms: Tuple[str, ...]
    hierarchy: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.description or _NOS_TOKEN.search(self.description):
            raise KnowledgeBaseError(
                f"Description of {self.code} must be non-empty and NOS-free",
                code=self.code.value,
            )
        if not self.synonyms:
            raise KnowledgeBaseError(f"Code {self.code} has no synonyms", code=self.code.value)
        labels = [label for label, _ in self.hierarchy]
        if len(labels) != len(set(labels)):
            raise KnowledgeBaseError(
                f"Hierarchy of {self.code} repeats a range label", code=self.code.value
            )


class KnowledgeBase:
    """Immutable code knowledge indexed by a dense, ordered label space."""

    def __init__(self, entries: Iterable[CodeEntry]):
        ordered: Dict[IcdCode, CodeEntry] = {}
        for entry in entries:
            if entry.code in ordered:
                raise KnowledgeBaseError(f"Duplicate code {entry.code}", code=entry.code.value)
            ordered[entry.code] = entry
        self._entries: Mapping[IcdCode, CodeEntry] = MappingProxyType(ordered)
        self._label_space: Tuple[IcdCode, ...] = tuple(ordered)
        self._index: Mapping[IcdCode, int] = MappingProxyType(
            {code: i for i, code in enumerate(self._label_space)}
        )
        self._by_value: Mapping[str, IcdCode] = MappingProxyType(
            {code.value: code for code in self._label_space}
        )

    @property
    def entries(self) -> Mapping[IcdCode, CodeEntry]:
        return self._entries

    @property
    def label_space(self) -> Tuple[IcdCode, ...]:
        return self._label_space

    def __len__(self) -> int:
        return len(self._label_space)

    def __contains__(self, code: object) -> bool:
        return code in self._entries

    def entry(self, code: IcdCode) -> CodeEntry:
        """Get the entry of a code, failing loudly when absent."""
        try:
            return self._entries[code]
        except KeyError:
            raise KnowledgeBaseError(f"Unknown code {code}", code=str(code)) from None

    def index_of(self, code: IcdCode) -> int:
        """Label-space index of a code."""
        try:
            return self._index[code]
        except KeyError:
            raise KnowledgeBaseError(f"Unknown code {code}", code=str(code)) from None

    def resolve(self, raw: str) -> IcdCode:
        """Map a raw code string onto the label space."""
        code = self._by_value.get(raw.strip()) if isinstance(raw, str) else None
        if code is None:
            raise KnowledgeBaseError(f"Code {raw!r} is not in the knowledge base", code=str(raw))
        return code

    def descriptions(self) -> List[str]:
        """Canonical descriptions in label-space order."""
        return [self._entries[code].description for code in self._label_space]

    def knowledge_texts(self) -> List[str]:
        """Every description, synonym and group description (tokenizer fitting)."""
        texts: List[str] = []
        for code in self._label_space:
            entry = self._entries[code]
            texts.append(entry.description)
            texts.extend(entry.synonyms)
            texts.extend(hierarchy_descriptions(entry))
        return texts

    def subset(self, codes: Iterable[IcdCode]) -> "KnowledgeBase":
        """New knowledge base restricted to ``codes``, keeping their relative order."""
        keep = set(codes)
        return KnowledgeBase(self._entries[code] for code in self._label_space if code in keep)


def normalize_description(text: str) -> str:
    """Strip standalone "NOS" tokens, collapse whitespace and dangling separators."""
    text = _NOS_TOKEN.sub(" ", text)
    text = _REPEATED_SEPARATORS.sub(r"\1", text)
    text = _SPACE_BEFORE_SEPARATOR.sub(r"\1", text)
    text = _WHITESPACE.sub(" ", text)
    return text.strip(" ,;")


def _clean(text: str) -> str:
    return normalize_description(text).lower()


def sample_synonym(entry: CodeEntry, rng: random.Random) -> str:
    """Draw one synonym of a code uniformly."""
    return rng.choice(entry.synonyms)


def hierarchy_descriptions(entry: CodeEntry) -> List[str]:
    """Ancestor group descriptions, most general first."""
    return [description for _, description in entry.hierarchy]


def _parse_row(line: str, line_no: int) -> CodeEntry:
    columns = [column.strip() for column in line.split(COLUMN_DELIMITER)]
    if not 2 <= len(columns) <= 4:
        raise KnowledgeBaseError(
            f"Line {line_no}: expected 2-4 '|'-separated columns, got {len(columns)}",
            line=line_no,
        )
    columns += [""] * (4 - len(columns))
    raw_code, raw_description, raw_synonyms, raw_hierarchy = columns

    try:
        code = IcdCode.parse(raw_code)
    except KnowledgeBaseError as e:
        raise KnowledgeBaseError(f"Line {line_no}: {e.message}", code=raw_code, line=line_no) from None

    description = _clean(raw_description)
    if not description:
        raise KnowledgeBaseError(
            f"Line {line_no}: code {code} has an empty description", code=code.value, line=line_no
        )

    synonyms = [description]
    for item in raw_synonyms.split(ITEM_DELIMITER):
        synonym = _clean(item)
        if synonym and synonym not in synonyms:
            synonyms.append(synonym)

    hierarchy: List[Tuple[str, str]] = []
    for item in raw_hierarchy.split(ITEM_DELIMITER):
        if not item.strip():
            continue
        label, sep, group_description = item.partition(RANGE_DELIMITER)
        label = label.strip()
        group_description = _clean(group_description)
        if not sep or not label or not group_description:
            raise KnowledgeBaseError(
                f"Line {line_no}: malformed hierarchy item {item.strip()!r} for code {code}",
                code=code.value,
                line=line_no,
            )
        if any(existing == label for existing, _ in hierarchy):
            raise KnowledgeBaseError(
                f"Line {line_no}: range {label} repeated for code {code}", code=code.value, line=line_no
            )
        hierarchy.append((label, group_description))

    try:
        return CodeEntry(code, description, tuple(synonyms), tuple(hierarchy))
    except KnowledgeBaseError as e:
        raise KnowledgeBaseError(f"Line {line_no}: {e.message}", code=code.value, line=line_no) from None


def load_knowledge_base(path: Path) -> KnowledgeBase:
    """Load a pipe-delimited knowledge base file.

    Args:
        path: KB file, one ``code | description | syn;syn | range:desc;range:desc`` row per code

    Returns:
        KnowledgeBase in file order
    """
    path = Path(path)
    if not path.is_file():
        raise KnowledgeBaseError(f"Knowledge base file not found: {path}")

    entries: List[CodeEntry] = []
    seen: Dict[IcdCode, int] = {}
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            entry = _parse_row(stripped, line_no)
            if entry.code in seen:
                raise KnowledgeBaseError(
                    f"Line {line_no}: duplicate code {entry.code} (first seen on line {seen[entry.code]})",
                    code=entry.code.value,
                    line=line_no,
                )
            seen[entry.code] = line_no
            entries.append(entry)

    kb = KnowledgeBase(entries)
    logger.info(f"Loaded knowledge base with {len(kb)} codes from {path}")
    return kb


def _check_serializable(text: str, code: IcdCode) -> str:
    if COLUMN_DELIMITER in text or ITEM_DELIMITER in text:
        raise KnowledgeBaseError(f"Text {text!r} of code {code} contains a delimiter", code=code.value)
    return text


def save_knowledge_base(kb: KnowledgeBase, path: Path) -> None:
    """Write a knowledge base in the format read by ``load_knowledge_base``."""
    lines = ["# code | description | synonyms | hierarchy"]
    for code in kb.label_space:
        entry = kb.entry(code)
        if COLUMN_DELIMITER in entry.description:
            raise KnowledgeBaseError(f"Description of {code} contains '|'", code=code.value)
        # the canonical description is re-added as the first synonym on load
        synonyms = ITEM_DELIMITER.join(_check_serializable(s, code) for s in entry.synonyms[1:])
        hierarchy = ITEM_DELIMITER.join(
            f"{label}{RANGE_DELIMITER}{_check_serializable(description, code)}"
            for label, description in entry.hierarchy
        )
        lines.append(f" {COLUMN_DELIMITER} ".join([code.value, entry.description, synonyms, hierarchy]))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def resolve_codes(kb: KnowledgeBase, raw_codes: Sequence[str]) -> List[IcdCode]:
    """Resolve raw code strings, keeping order and dropping repeats."""
    resolved: List[IcdCode] = []
    for raw in raw_codes:
        code = kb.resolve(raw)
        if code not in resolved:
            resolved.append(code)
    return resolved
