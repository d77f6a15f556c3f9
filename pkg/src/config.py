"""Configuration management for GKI-ICD."""

import json
from functools import lru_cache
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="GKI_",
        extra="ignore",
    )

    # Reproducibility
    seed: Optional[int] = None

    # Run registry
    database_url: str = "sqlite:///gki_runs.db"
    track_runs: bool = True

    # Application
    log_level: str = "INFO"
    num_threads: Optional[int] = None


# Ablation rows: name -> (knowledge_injection, use_synonyms, use_hierarchy)
KNOWLEDGE_MODES: Dict[str, Tuple[bool, bool, bool]] = {
    "none": (False, False, False),
    "desc": (True, False, False),
    "desc+syn": (True, True, False),
    "desc+hie": (True, False, True),
    "desc+syn+hie": (True, True, True),
}

# Label spaces at or below this size count as "small" for the R-Drop default.
SMALL_LABEL_SPACE = 50


class ModelConfig(BaseModel):
    """Shape and encoder choice of the coding network."""

    model_config = ConfigDict(extra="forbid")

    encoder: Literal["tiny_transformer", "pretrained"] = "tiny_transformer"
    hidden_dim: int = Field(default=128, ge=1)
    chunk_size: int = Field(default=512, ge=1)
    layers: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    ffn_dim: int = Field(default=256, ge=1)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    pretrained_name: Optional[str] = None
    scale_attention: bool = False

    @model_validator(mode="after")
    def _check_heads(self) -> "ModelConfig":
        if self.encoder == "tiny_transformer" and self.hidden_dim % self.heads != 0:
            raise ValueError(
                f"hidden_dim ({self.hidden_dim}) must be divisible by heads ({self.heads})"
            )
        if self.encoder == "pretrained" and not self.pretrained_name:
            raise ValueError("pretrained_name is required when encoder is 'pretrained'")
        return self


class TrainingConfig(BaseModel):
    """Optimisation and knowledge-injection parameters."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=5e-5, gt=0.0)
    epochs: int = Field(default=12, ge=1)
    warmup_steps: int = Field(default=2000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    eval_batch_size: int = Field(default=16, ge=1)
    lambda_sim: float = Field(default=1.0, ge=0.0)
    rdrop_alpha: Optional[float] = Field(default=None, ge=0.0)
    seed: int = 42
    max_tokens: int = Field(default=8192, ge=1)
    knowledge_injection: bool = True
    use_synonyms: bool = True
    use_hierarchy: bool = True
    sim_flatten: bool = False
    sim_stop_gradient: bool = False
    init_queries: bool = True
    threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    min_token_freq: int = Field(default=1, ge=1)

    def resolved_rdrop_alpha(self, num_codes: int) -> float:
        """R-Drop weight, defaulting by label-space size when unset."""
        if self.rdrop_alpha is not None:
            return self.rdrop_alpha
        return 10.0 if num_codes <= SMALL_LABEL_SPACE else 5.0

    @property
    def knowledge_mode(self) -> str:
        """Ablation row name matching the knowledge flags."""
        if not self.knowledge_injection:
            return "none"
        mode = "desc"
        if self.use_synonyms:
            mode += "+syn"
        if self.use_hierarchy:
            mode += "+hie"
        return mode

    def with_knowledge_mode(self, mode: str) -> "TrainingConfig":
        """Copy of this config switched to an ablation row."""
        if mode not in KNOWLEDGE_MODES:
            raise ValueError(f"Unknown knowledge mode {mode!r}; expected one of {sorted(KNOWLEDGE_MODES)}")
        injection, synonyms, hierarchy = KNOWLEDGE_MODES[mode]
        return self.model_copy(
            update={
                "knowledge_injection": injection,
                "use_synonyms": synonyms,
                "use_hierarchy": hierarchy,
            }
        )


class CorpusPaths(BaseModel):
    """Locations of the three splits and the knowledge base file."""

    model_config = ConfigDict(extra="forbid")

    train: Path
    dev: Path
    test: Path
    kb: Path

    def resolved(self, base: Path) -> "CorpusPaths":
        """Resolve relative paths against ``base``."""
        return CorpusPaths(
            **{name: (base / value).resolve() for name, value in self.model_dump().items()}
        )

    def split(self, name: str) -> Path:
        """Path of a split by name."""
        if name not in ("train", "dev", "test"):
            raise ValueError(f"Unknown split {name!r}")
        return getattr(self, name)


class RunConfig(BaseModel):
    """Top-level run configuration file schema."""

    model_config = ConfigDict(extra="forbid")

    corpus: CorpusPaths
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    top_k_codes: Optional[int] = Field(default=None, ge=1)


def load_run_config(path: Path) -> RunConfig:
    """Load and validate a JSON run config, resolving corpus paths.

    Args:
        path: Config file location

    Returns:
        Validated RunConfig with absolute corpus paths
    """
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    config = RunConfig.model_validate(raw)
    return config.model_copy(update={"corpus": config.corpus.resolved(path.parent)})


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
