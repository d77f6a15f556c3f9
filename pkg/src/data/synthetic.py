"""Synthetic long-tailed coding corpus with a toy ontology."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.data.corpus import Document, save_corpus
from src.knowledge.knowledge_base import CodeEntry, IcdCode, KnowledgeBase, save_knowledge_base

logger = logging.getLogger(__name__)

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"
EVIDENCE_CUES = ("diagnosed with", "treated for", "history of", "presenting with")
GROUP_BRANCHING = 4
PHRASE_WORDS = 2


class SyntheticSpec(BaseModel):
    """Shape of a generated corpus."""

    model_config = ConfigDict(extra="forbid")

    num_codes: int = Field(default=100, ge=1)
    num_train: int = Field(default=2000, ge=0)
    num_dev: int = Field(default=200, ge=0)
    num_test: int = Field(default=400, ge=0)
    zipf_exponent: float = Field(default=1.2, gt=0.0)
    codes_per_doc: Tuple[int, int] = (1, 4)
    noise_sentences_per_doc: Tuple[int, int] = (4, 12)
    noise_sentence_length: Tuple[int, int] = (4, 12)
    synonyms_per_code: int = Field(default=3, ge=1)
    hierarchy_depth: int = Field(default=2, ge=0)
    vocab_size: int = Field(default=2000, ge=1)
    seed: int = 7

    @model_validator(mode="after")
    def _check_ranges(self) -> "SyntheticSpec":
        for name in ("codes_per_doc", "noise_sentences_per_doc", "noise_sentence_length"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name}: min ({low}) exceeds max ({high})")
        if self.codes_per_doc[0] < 1:
            raise ValueError("codes_per_doc: min must be at least 1")
        if self.noise_sentences_per_doc[0] < 0:
            raise ValueError("noise_sentences_per_doc: min must be non-negative")
        if self.noise_sentence_length[0] < 1:
            raise ValueError("noise_sentence_length: min must be at least 1")
        return self


@dataclass(frozen=True)
class SyntheticCorpus:
    """Generated knowledge base and splits."""

    kb: KnowledgeBase
    train: List[Document]
    dev: List[Document]
    test: List[Document]

    @property
    def splits(self) -> Dict[str, List[Document]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


class _WordFactory:
    """Unique pronounceable pseudo-words; every word is handed out once."""

    def __init__(self, rng: np.random.Generator, reserved: Set[str]):
        self.rng = rng
        self.used = set(reserved)

    def word(self) -> str:
        while True:
            syllables = int(self.rng.integers(2, 5))
            candidate = "".join(
                CONSONANTS[self.rng.integers(len(CONSONANTS))] + VOWELS[self.rng.integers(len(VOWELS))]
                for _ in range(syllables)
            )
            if candidate not in self.used:
                self.used.add(candidate)
                return candidate

    def phrase(self, words: int = PHRASE_WORDS) -> str:
        return " ".join(self.word() for _ in range(words))


def _code_value(index: int) -> str:
    return f"{index // 100 + 1:03d}.{index % 100:02d}"


def _hierarchy_levels(num_codes: int, depth: int) -> List[int]:
    """Group counts per level, general first; levels that split nothing are skipped."""
    levels: List[int] = []
    for level in range(depth):
        groups = GROUP_BRANCHING ** (level + 1)
        if groups >= num_codes:
            break
        levels.append(groups)
    return levels


def _build_knowledge_base(
    spec: SyntheticSpec, words: _WordFactory
) -> Tuple[KnowledgeBase, List[List[str]]]:
    codes = [IcdCode.parse(_code_value(i)) for i in range(spec.num_codes)]
    phrases = [[words.phrase() for _ in range(spec.synonyms_per_code)] for _ in codes]

    hierarchies: List[List[Tuple[str, str]]] = [[] for _ in codes]
    for groups in _hierarchy_levels(spec.num_codes, spec.hierarchy_depth):
        members: Dict[int, List[int]] = {}
        for i in range(spec.num_codes):
            members.setdefault(i * groups // spec.num_codes, []).append(i)
        for group_codes in members.values():
            label = f"{codes[group_codes[0]].value}-{codes[group_codes[-1]].value}"
            description = words.phrase()
            for i in group_codes:
                hierarchies[i].append((label, description))

    entries = [
        CodeEntry(code, phrases[i][0], tuple(phrases[i]), tuple(hierarchies[i]))
        for i, code in enumerate(codes)
    ]
    return KnowledgeBase(entries), phrases


def _zipf_probabilities(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    # frequency rank is shuffled against code index so every group mixes head and tail codes
    ranks = rng.permutation(spec.num_codes) + 1
    weights = 1.0 / np.power(ranks, spec.zipf_exponent)
    return weights / weights.sum()


def _make_document(
    doc_id: str,
    spec: SyntheticSpec,
    kb: KnowledgeBase,
    phrases: List[List[str]],
    probabilities: np.ndarray,
    noise_vocab: List[str],
    rng: np.random.Generator,
) -> Document:
    low, high = spec.codes_per_doc
    high = min(high, spec.num_codes)
    low = min(low, high)
    n_codes = int(rng.integers(low, high + 1))
    code_indices = sorted(int(i) for i in rng.choice(spec.num_codes, size=n_codes, replace=False, p=probabilities))

    sentences: List[Tuple[str, int]] = []
    for i in code_indices:
        cue = EVIDENCE_CUES[rng.integers(len(EVIDENCE_CUES))]
        synonym = phrases[i][rng.integers(len(phrases[i]))]
        sentences.append((f"{cue} {synonym} .", i))

    n_noise = int(rng.integers(spec.noise_sentences_per_doc[0], spec.noise_sentences_per_doc[1] + 1))
    for _ in range(n_noise):
        length = int(rng.integers(spec.noise_sentence_length[0], spec.noise_sentence_length[1] + 1))
        picks = rng.integers(len(noise_vocab), size=length)
        sentences.append((" ".join(noise_vocab[j] for j in picks) + " .", -1))

    order = rng.permutation(len(sentences))
    parts: List[str] = []
    evidence: Dict[str, Tuple[int, int]] = {}
    offset = 0
    for position in order:
        sentence, code_index = sentences[position]
        if parts:
            offset += 1
        if code_index >= 0:
            evidence[kb.label_space[code_index].value] = (offset, offset + len(sentence))
        parts.append(sentence)
        offset += len(sentence)

    codes = tuple(kb.label_space[i] for i in code_indices)
    return Document(id=doc_id, text=" ".join(parts), codes=codes, evidence=evidence)


def generate_synthetic_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    """Generate a knowledge base and train/dev/test splits.

    Every positive code gets one evidence sentence built from a randomly chosen
    synonym; noise sentences use a vocabulary disjoint from all code knowledge.
    Identical specs give identical corpora.
    """
    rng = np.random.default_rng(spec.seed)
    reserved = {word for cue in EVIDENCE_CUES for word in cue.split()}
    words = _WordFactory(rng, reserved)

    kb, phrases = _build_knowledge_base(spec, words)
    noise_vocab = [words.word() for _ in range(spec.vocab_size)]
    probabilities = _zipf_probabilities(spec, rng)

    splits: Dict[str, List[Document]] = {}
    for name, size in (("train", spec.num_train), ("dev", spec.num_dev), ("test", spec.num_test)):
        splits[name] = [
            _make_document(f"{name}-{j:05d}", spec, kb, phrases, probabilities, noise_vocab, rng)
            for j in range(size)
        ]
        if size == 0:
            logger.warning(f"Synthetic spec requests an empty {name} split")

    logger.info(
        f"Generated synthetic corpus: {len(kb)} codes, "
        f"{spec.num_train}/{spec.num_dev}/{spec.num_test} documents (seed={spec.seed})"
    )
    return SyntheticCorpus(kb=kb, **splits)


def write_synthetic_corpus(corpus: SyntheticCorpus, out_dir: Path) -> Dict[str, Path]:
    """Write kb.txt and the three JSONL splits; returns artifact paths by name."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"kb": out_dir / "kb.txt"}
    save_knowledge_base(corpus.kb, paths["kb"])
    for name, documents in corpus.splits.items():
        paths[name] = out_dir / f"{name}.jsonl"
        save_corpus(documents, paths[name])
    return paths
