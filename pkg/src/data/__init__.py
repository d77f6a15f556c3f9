"""Corpus ingestion, tokenization and synthetic data."""

from src.data.corpus import (
    CorpusError,
    Document,
    EncodedExample,
    code_frequencies,
    encode,
    encode_corpus,
    load_corpus,
    multi_hot,
    restrict_documents,
    restrict_to_top_codes,
    save_corpus,
)
from src.data.synthetic import SyntheticCorpus, SyntheticSpec, generate_synthetic_corpus, write_synthetic_corpus
from src.data.tokenizer import Tokenizer, WordTokenizer, build_tokenizer, tokenizer_from_dict

__all__ = [
    "CorpusError",
    "Document",
    "EncodedExample",
    "code_frequencies",
    "encode",
    "encode_corpus",
    "load_corpus",
    "multi_hot",
    "restrict_documents",
    "restrict_to_top_codes",
    "save_corpus",
    "SyntheticCorpus",
    "SyntheticSpec",
    "generate_synthetic_corpus",
    "write_synthetic_corpus",
    "Tokenizer",
    "WordTokenizer",
    "build_tokenizer",
    "tokenizer_from_dict",
]
