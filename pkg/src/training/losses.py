"""Loss terms of the multi-task objective."""

import torch

PROB_EPS = 1e-7
NORM_EPS = 1e-12


def _check_shapes(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")


def bce_loss(probs: torch.Tensor, labels: torch.Tensor, eps: float = PROB_EPS) -> torch.Tensor:
    """Binary cross-entropy averaged over codes (and over the batch when batched)."""
    _check_shapes(probs, labels, "bce_loss")
    p = probs.clamp(eps, 1.0 - eps)
    y = labels.to(p.dtype)
    return -(y * torch.log(p) + (1.0 - y) * torch.log1p(-p)).mean()


def similarity_loss(
    evidence: torch.Tensor,
    guide_evidence: torch.Tensor,
    labels: torch.Tensor,
    eps: float = NORM_EPS,
    flatten: bool = False,
) -> torch.Tensor:
    """``1 - cosine`` between raw and guideline evidence of the positive codes.

    Args:
        evidence: ``[C, D]`` or ``[B, C, D]`` evidence E from the raw text
        guide_evidence: Same shape, evidence from the guideline
        labels: ``[C]`` or ``[B, C]`` binary targets selecting positive rows
        eps: Floor on row norms
        flatten: Compare the masked matrices as single vectors instead of per row

    Returns:
        Mean over positive codes (per sample, then over samples with positives);
        zero when no code is positive
    """
    _check_shapes(evidence, guide_evidence, "similarity_loss")
    if evidence.dim() == 2:
        evidence, guide_evidence, labels = evidence[None], guide_evidence[None], labels[None]
    if labels.shape != evidence.shape[:2]:
        raise ValueError(f"similarity_loss: labels {tuple(labels.shape)} vs evidence {tuple(evidence.shape)}")

    mask = labels.to(evidence.dtype)
    e = evidence * mask[..., None]
    g = guide_evidence * mask[..., None]
    positives = mask.sum(dim=-1)
    has_positive = positives > 0
    if not has_positive.any():
        return evidence.new_zeros(())

    if flatten:
        e, g = e.flatten(1), g.flatten(1)
        cosine = (e * g).sum(-1) / (e.norm(dim=-1).clamp_min(eps) * g.norm(dim=-1).clamp_min(eps))
        per_sample = 1.0 - cosine.clamp(-1.0, 1.0)
    else:
        cosine = (e * g).sum(-1) / (e.norm(dim=-1).clamp_min(eps) * g.norm(dim=-1).clamp_min(eps))
        per_row = (1.0 - cosine.clamp(-1.0, 1.0)) * mask
        per_sample = per_row.sum(-1) / positives.clamp_min(1.0)

    return per_sample[has_positive].mean()


def rdrop_loss(probs: torch.Tensor, other_probs: torch.Tensor, eps: float = PROB_EPS) -> torch.Tensor:
    """Halved symmetric KL between per-code Bernoulli predictions, averaged over codes."""
    _check_shapes(probs, other_probs, "rdrop_loss")
    p = probs.clamp(eps, 1.0 - eps)
    q = other_probs.clamp(eps, 1.0 - eps)
    log_p, log_q = torch.log(p), torch.log(q)
    log_np, log_nq = torch.log1p(-p), torch.log1p(-q)
    kl_pq = p * (log_p - log_q) + (1.0 - p) * (log_np - log_nq)
    kl_qp = q * (log_q - log_p) + (1.0 - q) * (log_nq - log_np)
    return 0.5 * (kl_pq + kl_qp).mean()
