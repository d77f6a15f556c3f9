"""Word-level tokenizer for the tiny encoder, plus a pretrained adapter."""

import logging
import re
from collections import Counter
from typing import Any, Dict, Iterable, List, Optional, Protocol, Tuple

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]")

# (token, start_char, end_char)
TokenSpan = Tuple[str, int, int]


class Tokenizer(Protocol):
    """What the corpus, model and inspection code need from a tokenizer."""

    pad_id: int

    @property
    def vocab_size(self) -> int: ...

    def tokenize_with_offsets(self, text: str) -> List[TokenSpan]: ...

    def encode(self, text: str) -> List[int]: ...

    def id_to_token(self, token_id: int) -> str: ...

    def to_dict(self) -> Dict[str, Any]: ...


class WordTokenizer:
    """Lower-cased word/punctuation tokenizer with a fitted vocabulary and an OOV id."""

    pad_id = 0
    unk_id = 1

    def __init__(self, vocab: List[str]):
        if vocab[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError(f"Vocabulary must start with {PAD_TOKEN!r}, {UNK_TOKEN!r}")
        self.vocab = list(vocab)
        self._ids = {token: i for i, token in enumerate(self.vocab)}

    @classmethod
    def fit(cls, texts: Iterable[str], min_freq: int = 1) -> "WordTokenizer":
        """Build a vocabulary from texts, most frequent first, ties alphabetical."""
        counts: Counter = Counter()
        for text in texts:
            counts.update(token for token, _, _ in cls._spans(text))
        kept = sorted((t for t, n in counts.items() if n >= min_freq), key=lambda t: (-counts[t], t))
        tokenizer = cls([PAD_TOKEN, UNK_TOKEN, *kept])
        logger.info(f"Fitted vocabulary of {tokenizer.vocab_size} tokens (min_freq={min_freq})")
        return tokenizer

    @staticmethod
    def _spans(text: str) -> List[TokenSpan]:
        return [(m.group(0).lower(), m.start(), m.end()) for m in TOKEN_PATTERN.finditer(text)]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def tokenize_with_offsets(self, text: str) -> List[TokenSpan]:
        return self._spans(text)

    def encode(self, text: str) -> List[int]:
        return [self._ids.get(token, self.unk_id) for token, _, _ in self._spans(text)]

    def id_to_token(self, token_id: int) -> str:
        return self.vocab[token_id] if 0 <= token_id < len(self.vocab) else UNK_TOKEN

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "word", "vocab": list(self.vocab)}


class PretrainedTokenizer:
    """Adapter over a Hugging Face fast tokenizer (loaded lazily)."""

    def __init__(self, name: str):
        try:
            from transformers import AutoTokenizer
        except ImportError as e:
            raise ImportError("transformers is required for pretrained tokenizers") from e
        self.name = name
        self._tokenizer = AutoTokenizer.from_pretrained(name, use_fast=True)
        self.pad_id = self._tokenizer.pad_token_id if self._tokenizer.pad_token_id is not None else 0

    @property
    def vocab_size(self) -> int:
        return len(self._tokenizer)

    def tokenize_with_offsets(self, text: str) -> List[TokenSpan]:
        encoded = self._tokenizer(text, add_special_tokens=False, return_offsets_mapping=True)
        return [(text[start:end], start, end) for start, end in encoded["offset_mapping"]]

    def encode(self, text: str) -> List[int]:
        return list(self._tokenizer(text, add_special_tokens=False)["input_ids"])

    def id_to_token(self, token_id: int) -> str:
        return self._tokenizer.convert_ids_to_tokens(token_id)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "pretrained", "name": self.name}


def tokenizer_from_dict(data: Dict[str, Any]) -> Tokenizer:
    """Rebuild a tokenizer from its ``to_dict`` form."""
    kind = data.get("type")
    if kind == "word":
        return WordTokenizer(list(data["vocab"]))
    if kind == "pretrained":
        return PretrainedTokenizer(data["name"])
    raise ValueError(f"Unknown tokenizer type {kind!r}")


def build_tokenizer(
    texts: Iterable[str],
    min_freq: int = 1,
    pretrained_name: Optional[str] = None,
) -> Tokenizer:
    """Fit a word tokenizer, or load the pretrained one matching the encoder."""
    if pretrained_name:
        return PretrainedTokenizer(pretrained_name)
    return WordTokenizer.fit(texts, min_freq=min_freq)
