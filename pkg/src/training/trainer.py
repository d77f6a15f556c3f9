"""Multi-task training loop: paired raw/guideline passes, similarity and R-Drop terms."""

import copy
import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import torch
from tqdm import tqdm

from src.config import TrainingConfig
from src.data.corpus import EncodedExample
from src.data.tokenizer import Tokenizer
from src.evaluation.predict import predict
from src.evaluation.report import MetricReport, evaluate_batch
from src.knowledge.guideline import GuidelineOptions, GuidelineSynthesizer, positive_codes
from src.knowledge.knowledge_base import KnowledgeBase
from src.model.coding_model import IcdCodingModel, pad_batch
from src.training.losses import bce_loss, rdrop_loss, similarity_loss
from src.training.schedule import build_scheduler

logger = logging.getLogger(__name__)


class TrainingError(Exception):
    """Exception raised when an optimisation step cannot proceed."""

    def __init__(self, message: str, step: Optional[int] = None, sample_ids: Sequence[str] = ()):
        self.message = message
        self.step = step
        self.sample_ids = list(sample_ids)
        super().__init__(message)


@dataclass(frozen=True)
class StepLosses:
    """Loss terms of one step; ``total`` is their weighted sum."""

    l_raw: float
    l_guide: float
    l_sim: float
    l_rdrop: float
    total: float

    @classmethod
    def combine(
        cls, l_raw: float, l_guide: float, l_sim: float, l_rdrop: float, lambda_sim: float, rdrop_alpha: float
    ) -> "StepLosses":
        total = l_raw + l_guide + lambda_sim * l_sim + rdrop_alpha * l_rdrop
        return cls(l_raw=l_raw, l_guide=l_guide, l_sim=l_sim, l_rdrop=l_rdrop, total=total)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_raw, self.l_guide, self.l_sim, self.l_rdrop, self.total))


@dataclass
class TrainingBatch:
    """A padded batch of raw texts and, for rows with positives, their guidelines."""

    ids: List[str]
    token_ids: torch.Tensor  # [B, N]
    mask: torch.Tensor  # [B, N]
    labels: torch.Tensor  # [B, C]
    guide_rows: List[int] = field(default_factory=list)
    guide_token_ids: Optional[torch.Tensor] = None  # [G, N']
    guide_mask: Optional[torch.Tensor] = None

    def to(self, device: str) -> "TrainingBatch":
        move = lambda t: None if t is None else t.to(device)  # noqa: E731
        return TrainingBatch(
            ids=self.ids,
            token_ids=move(self.token_ids),
            mask=move(self.mask),
            labels=move(self.labels),
            guide_rows=self.guide_rows,
            guide_token_ids=move(self.guide_token_ids),
            guide_mask=move(self.guide_mask),
        )


def collate(
    examples: Sequence[EncodedExample],
    guidelines: Optional[Sequence[Optional[List[int]]]] = None,
    pad_id: int = 0,
) -> TrainingBatch:
    """Pad raw texts and the non-empty guidelines of a batch.

    Args:
        examples: Encoded raw documents
        guidelines: Guideline token ids aligned with ``examples``; None entries have no guideline
        pad_id: Padding token id

    Returns:
        TrainingBatch with float labels
    """
    token_ids, mask = pad_batch([e.token_ids for e in examples], pad_id)
    labels = torch.as_tensor(np.stack([e.labels for e in examples]), dtype=torch.float32)
    batch = TrainingBatch(ids=[e.id for e in examples], token_ids=token_ids, mask=mask, labels=labels)
    if guidelines is not None:
        rows = [i for i, g in enumerate(guidelines) if g]
        if rows:
            batch.guide_rows = rows
            batch.guide_token_ids, batch.guide_mask = pad_batch([guidelines[i] for i in rows], pad_id)
    return batch


def compute_losses(
    model: IcdCodingModel,
    batch: TrainingBatch,
    lambda_sim: float,
    rdrop_alpha: float,
    knowledge_injection: bool = True,
    sim_flatten: bool = False,
    sim_stop_gradient: bool = False,
) -> Tuple[torch.Tensor, StepLosses]:
    """Forward passes and the weighted objective for one batch.

    Returns:
        Tuple of the differentiable total and its per-term breakdown
    """
    raw = model(batch.token_ids, batch.mask)
    l_raw = bce_loss(raw.probs, batch.labels)
    l_rdrop = l_raw.new_zeros(())
    if rdrop_alpha > 0:
        second = model(batch.token_ids, batch.mask)
        l_raw = 0.5 * (l_raw + bce_loss(second.probs, batch.labels))
        l_rdrop = rdrop_loss(raw.probs, second.probs)

    l_guide = l_raw.new_zeros(())
    l_sim = l_raw.new_zeros(())
    if knowledge_injection and batch.guide_rows:
        rows = torch.as_tensor(batch.guide_rows, device=batch.labels.device)
        labels = batch.labels.index_select(0, rows)
        guide = model(batch.guide_token_ids, batch.guide_mask)
        l_guide = bce_loss(guide.probs, labels)
        target = guide.evidence.detach() if sim_stop_gradient else guide.evidence
        l_sim = similarity_loss(raw.evidence.index_select(0, rows), target, labels, flatten=sim_flatten)

    total = l_raw + l_guide + lambda_sim * l_sim + rdrop_alpha * l_rdrop
    losses = StepLosses.combine(
        l_raw.item(), l_guide.item(), l_sim.item(), l_rdrop.item(), lambda_sim, rdrop_alpha
    )
    return total, losses


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


@dataclass
class EpochResult:
    """Mean losses of an epoch and the dev report that followed it."""

    epoch: int
    losses: StepLosses
    dev_report: Optional[MetricReport] = None

    @property
    def dev_micro_f1(self) -> Optional[float]:
        return None if self.dev_report is None else self.dev_report.micro_f1


@dataclass
class TrainingResult:
    best_epoch: int
    history: List[EpochResult]
    steps: int


class Trainer:
    """Owns the optimiser, schedule and guideline resampling for one training run."""

    def __init__(
        self,
        model: IcdCodingModel,
        kb: KnowledgeBase,
        tokenizer: Tokenizer,
        config: TrainingConfig,
        train_examples: Sequence[EncodedExample],
        dev_examples: Sequence[EncodedExample] = (),
        train_code_frequencies: Optional[np.ndarray] = None,
        loss_log: Optional[Path] = None,
        device: str = "cpu",
        progress: bool = True,
    ):
        if not train_examples:
            raise TrainingError("Training split is empty")
        self.model = model.to(device)
        self.kb = kb
        self.tokenizer = tokenizer
        self.config = config
        self.train_examples = list(train_examples)
        self.dev_examples = list(dev_examples)
        self.train_code_frequencies = train_code_frequencies
        self.loss_log = Path(loss_log) if loss_log else None
        self.device = device
        self.progress = progress

        self.rdrop_alpha = config.resolved_rdrop_alpha(len(kb))
        self.steps_per_epoch = math.ceil(len(self.train_examples) / config.batch_size)
        self.total_steps = config.epochs * self.steps_per_epoch
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=config.learning_rate)
        self.scheduler = build_scheduler(
            self.optimizer, config.learning_rate, config.warmup_steps, self.total_steps
        )
        self.synthesizer = GuidelineSynthesizer(
            kb,
            GuidelineOptions(
                use_synonyms=config.use_synonyms,
                use_hierarchy=config.use_hierarchy,
                seed=config.seed,
            ),
        )
        self.step = 0
        logger.info(
            f"Trainer ready: C={len(kb)}, {len(self.train_examples)} train docs, "
            f"{self.steps_per_epoch} steps/epoch, alpha={self.rdrop_alpha}, lambda={config.lambda_sim}, "
            f"knowledge={config.knowledge_mode}"
        )

    @property
    def current_lr(self) -> float:
        return self.scheduler.get_last_lr()[0]

    def guidelines_for_epoch(self, epoch: int) -> Dict[str, Optional[List[int]]]:
        """Fresh guideline token ids for every training sample."""
        if not self.config.knowledge_injection:
            return {}
        guidelines: Dict[str, Optional[List[int]]] = {}
        for example in self.train_examples:
            codes = positive_codes(example.labels, self.kb.label_space)
            guideline = self.synthesizer.synthesize(example.id, codes, epoch)
            guidelines[example.id] = (
                None if guideline.is_empty else self.tokenizer.encode(guideline.text)[: self.config.max_tokens]
            )
        return guidelines

    def epoch_order(self, epoch: int) -> List[int]:
        generator = torch.Generator().manual_seed(self.config.seed * 1000 + epoch)
        return torch.randperm(len(self.train_examples), generator=generator).tolist()

    def train_step(self, batch: TrainingBatch) -> StepLosses:
        """One optimiser update on a collated batch."""
        self.model.train()
        self.optimizer.zero_grad()
        total, losses = compute_losses(
            self.model,
            batch.to(self.device),
            lambda_sim=self.config.lambda_sim,
            rdrop_alpha=self.rdrop_alpha,
            knowledge_injection=self.config.knowledge_injection,
            sim_flatten=self.config.sim_flatten,
            sim_stop_gradient=self.config.sim_stop_gradient,
        )
        if not losses.is_finite():
            raise TrainingError(
                f"Non-finite loss at step {self.step} ({losses}) for samples {batch.ids}",
                step=self.step,
                sample_ids=batch.ids,
            )
        total.backward()
        self.optimizer.step()
        self.scheduler.step()
        self.step += 1
        return losses

    def evaluate(self, examples: Sequence[EncodedExample]) -> MetricReport:
        predictions = predict(
            self.model,
            examples,
            pad_id=self.tokenizer.pad_id,
            batch_size=self.config.eval_batch_size,
            device=self.device,
        )
        return evaluate_batch(
            predictions.to_eval_batch(self.train_code_frequencies),
            threshold=self.config.threshold,
        )

    def _log_step(self, sink: Optional[TextIO], lr: float, losses: StepLosses) -> None:
        if sink is None:
            return
        record = {"step": self.step, "lr": lr, **asdict(losses)}
        sink.write(json.dumps(record) + "\n")

    def _run_epoch(self, epoch: int, sink: Optional[TextIO]) -> StepLosses:
        guidelines = self.guidelines_for_epoch(epoch)
        order = self.epoch_order(epoch)
        batch_size = self.config.batch_size
        sums = np.zeros(5)
        bar = tqdm(
            range(0, len(order), batch_size),
            desc=f"epoch {epoch + 1}/{self.config.epochs}",
            disable=not self.progress,
            leave=False,
        )
        for start in bar:
            chunk = [self.train_examples[i] for i in order[start : start + batch_size]]
            batch = collate(
                chunk,
                [guidelines.get(e.id) for e in chunk] if guidelines else None,
                pad_id=self.tokenizer.pad_id,
            )
            lr = self.current_lr
            losses = self.train_step(batch)
            self._log_step(sink, lr, losses)
            sums += (losses.l_raw, losses.l_guide, losses.l_sim, losses.l_rdrop, losses.total)
            bar.set_postfix(loss=f"{losses.total:.4f}")

        mean = sums / self.steps_per_epoch
        return StepLosses(*(float(v) for v in mean))

    def fit(self, on_epoch_end: Optional[Callable[[EpochResult], None]] = None) -> TrainingResult:
        """Train for the configured epochs, keeping the parameters of the best dev epoch.

        Without a dev split the final parameters are kept.
        """
        history: List[EpochResult] = []
        best_state = None
        best_score = -1.0
        best_epoch = self.config.epochs - 1

        sink = self.loss_log.open("w", encoding="utf-8") if self.loss_log else None
        try:
            for epoch in range(self.config.epochs):
                losses = self._run_epoch(epoch, sink)
                report = self.evaluate(self.dev_examples) if self.dev_examples else None
                result = EpochResult(epoch=epoch, losses=losses, dev_report=report)
                history.append(result)

                message = f"Epoch {epoch + 1}: loss={losses.total:.4f} (raw={losses.l_raw:.4f}"
                message += f", guide={losses.l_guide:.4f}, sim={losses.l_sim:.4f}, rdrop={losses.l_rdrop:.4f})"
                if report is not None:
                    message += f" dev micro-F1={report.micro_f1:.4f} macro-F1={report.macro_f1:.4f}"
                    if report.micro_f1 > best_score:
                        best_score = report.micro_f1
                        best_epoch = epoch
                        best_state = copy.deepcopy(self.model.state_dict())
                logger.info(message)

                if on_epoch_end is not None:
                    on_epoch_end(result)
        finally:
            if sink is not None:
                sink.close()

        if best_state is not None:
            self.model.load_state_dict(best_state)
            logger.info(f"Restored parameters of epoch {best_epoch + 1} (dev micro-F1={best_score:.4f})")
        return TrainingResult(best_epoch=best_epoch, history=history, steps=self.step)
