"""Thin training and inference wrappers around transformers checkpoints.

Everything here is deliberately plain: seeded full-pass loops with AdamW,
no schedulers, no early stopping, no metric tracking. The point is a
reproducible mapping from (checkpoint, corpus, hyperparameters) to exported
numbers, not training quality. All randomness flows from explicit seeds and
record/batch order is fixed, so reruns produce identical files.
"""

import numpy as np
import torch
from transformers import (
    AutoModelForCausalLM,
    AutoModelForSequenceClassification,
    AutoTokenizer,
)

from .config import AdapterError


def resolve_device(name: str) -> torch.device:
    if name.startswith("cuda") and not torch.cuda.is_available():
        raise AdapterError(f"device {name!r} requested but CUDA is not available")
    return torch.device(name)


def load_lm(checkpoint: str, device: torch.device):
    """Tokenizer plus causal LM; pad falls back to eos when undefined."""
    try:
        tok = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForCausalLM.from_pretrained(checkpoint)
    except Exception as exc:
        raise AdapterError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
    if tok.pad_token_id is None:
        if tok.eos_token_id is None:
            raise AdapterError(f"checkpoint {checkpoint!r} defines neither pad nor eos token")
        tok.pad_token = tok.eos_token
    model.config.pad_token_id = tok.pad_token_id
    return tok, model.to(device)


def load_classifier(checkpoint: str, num_labels: int, seed: int, device: torch.device):
    """Sequence classifier with a freshly seeded head on top of the checkpoint."""
    torch.manual_seed(seed)
    try:
        tok = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForSequenceClassification.from_pretrained(
            checkpoint, num_labels=num_labels
        )
    except Exception as exc:
        raise AdapterError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
    if tok.pad_token_id is None:
        if tok.eos_token_id is None:
            raise AdapterError(f"checkpoint {checkpoint!r} defines neither pad nor eos token")
        tok.pad_token = tok.eos_token
    model.config.pad_token_id = tok.pad_token_id
    return tok, model.to(device)


def _encode(tok, texts: list[str], max_length: int, device: torch.device):
    enc = tok(
        texts,
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )
    return {k: v.to(device) for k, v in enc.items()}


def _epoch_order(n: int, seed: int, epoch: int) -> list[int]:
    gen = np.random.Generator(np.random.Philox([seed, epoch]))
    return [int(i) for i in gen.permutation(n)]


def finetune_lm(
    tok, model, texts: list[str], *, epochs: int, batch_size: int,
    learning_rate: float, seed: int, max_length: int, device: torch.device,
) -> None:
    """Causal-LM fine-tune over the whole corpus, labels masked at padding."""
    torch.manual_seed(seed)
    opt = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    model.train()
    for epoch in range(epochs):
        order = _epoch_order(len(texts), seed, epoch)
        for start in range(0, len(order), batch_size):
            batch = [texts[i] for i in order[start : start + batch_size]]
            enc = _encode(tok, batch, max_length, device)
            labels = enc["input_ids"].masked_fill(enc["attention_mask"] == 0, -100)
            loss = model(**enc, labels=labels).loss
            loss.backward()
            opt.step()
            opt.zero_grad()
    model.eval()


@torch.no_grad()
def generate_continuation(
    tok, model, prompt: str, *, max_new_tokens: int, max_length: int,
    device: torch.device, sample: bool = False, seed: int = 0,
) -> str:
    """Continuation text only; the prompt is stripped before decoding."""
    enc = _encode(tok, [prompt], max_length, device)
    if sample:
        torch.manual_seed(seed)
    out = model.generate(
        input_ids=enc["input_ids"],
        attention_mask=enc["attention_mask"],
        max_new_tokens=max_new_tokens,
        do_sample=sample,
        pad_token_id=tok.pad_token_id,
    )
    cont_ids = out[0][enc["input_ids"].shape[1] :]
    return tok.decode(cont_ids, skip_special_tokens=True).strip()


def finetune_classifier(
    tok, model, texts: list[str], labels: list[int], train_idx: list[int], *,
    epochs: int, batch_size: int, learning_rate: float, seed: int,
    max_length: int, device: torch.device, snapshot_all: bool = False,
) -> np.ndarray | None:
    """Train on train_idx rows; optionally snapshot all docs after each epoch.

    Snapshots are the per-document top-class softmax confidence, one row per
    epoch, matching the trajectory wire format the audit toolkit reads.
    """
    torch.manual_seed(seed)
    label_t = torch.tensor(labels, dtype=torch.long, device=device)
    opt = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    snaps: list[np.ndarray] = []
    for epoch in range(epochs):
        model.train()
        order = [train_idx[i] for i in _epoch_order(len(train_idx), seed, epoch)]
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            enc = _encode(tok, [texts[i] for i in idx], max_length, device)
            loss = model(**enc, labels=label_t[idx]).loss
            loss.backward()
            opt.step()
            opt.zero_grad()
        if snapshot_all:
            snaps.append(_top_confidences(tok, model, texts, batch_size, max_length, device))
    model.eval()
    return np.stack(snaps) if snapshot_all else None


@torch.no_grad()
def _top_confidences(tok, model, texts, batch_size, max_length, device) -> np.ndarray:
    model.eval()
    rows: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        enc = _encode(tok, texts[start : start + batch_size], max_length, device)
        probs = torch.softmax(model(**enc).logits, dim=-1)
        rows.append(probs.max(dim=-1).values.cpu().numpy())
    return np.concatenate(rows)


@torch.no_grad()
def per_doc_losses(
    tok, model, texts: list[str], labels: list[int], *,
    batch_size: int, max_length: int, device: torch.device,
) -> np.ndarray:
    """Per-document cross-entropy of the true label, unreduced."""
    model.eval()
    label_t = torch.tensor(labels, dtype=torch.long, device=device)
    ce = torch.nn.CrossEntropyLoss(reduction="none")
    out: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        enc = _encode(tok, texts[start : start + batch_size], max_length, device)
        logits = model(**enc).logits
        out.append(ce(logits, label_t[start : start + batch_size]).cpu().numpy())
    return np.concatenate(out).astype(np.float64)
