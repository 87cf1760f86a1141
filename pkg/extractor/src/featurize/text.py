"""Sentence encoders producing one unit-norm vector per text.

The default backend hashes word and character n-gram features into a
fixed number of signed slots, encodes each token, then mean-pools the
token vectors — the same pooling shape as averaging a neural encoder's
output sequence, but fully deterministic and dependency-free. The
``transformers`` backend mean-pools the last hidden layer of a named
pretrained model when that stack (and its weights) is available.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


class TextEncodeError(Exception):
    pass


class ModelLoadError(Exception):
    pass


def _hash_slot(feature: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=16).digest()
    idx = int.from_bytes(digest[:8], "little") % dim
    sign = 1.0 if digest[8] & 1 else -1.0
    return idx, sign


class HashedNgramTextEncoder:
    """Deterministic bag-of-subwords sentence encoder."""

    name = "hashed-ngram-v1"

    def __init__(self, dim: int = 256, ngram: int = 3):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim
        self.ngram = ngram

    def _token_vector(self, token: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        features = [f"w:{token}"]
        padded = f"^{token}$"
        features.extend(
            f"g:{padded[i:i + self.ngram]}"
            for i in range(max(1, len(padded) - self.ngram + 1))
        )
        for feat in features:
            idx, sign = _hash_slot(feat, self.dim)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            if text is None or not text.strip():
                raise TextEncodeError(f"row {row}: empty text")
            tokens = _TOKEN_RE.findall(text.lower())
            if not tokens:
                raise TextEncodeError(f"row {row}: no tokens in {text!r}")
            pooled = np.mean([self._token_vector(t) for t in tokens], axis=0)
            norm = np.linalg.norm(pooled)
            if norm == 0.0:
                raise TextEncodeError(f"row {row}: degenerate encoding for {text!r}")
            out[row] = pooled / norm
        return out.astype(np.float32)


class TransformersTextEncoder:
    """Mean-pooled last hidden state of a pretrained language model."""

    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(f"transformers backend unavailable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name).to(device).eval()
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_name!r}: {exc}") from exc
        self.name = f"transformers:{model_name}"
        self.device = device
        self.pooling = "mean over last_hidden_state"

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        import torch

        for row, text in enumerate(texts):
            if text is None or not text.strip():
                raise TextEncodeError(f"row {row}: empty text")
        with torch.no_grad():
            enc = self.tokenizer(
                list(texts), padding=True, truncation=True, return_tensors="pt"
            ).to(self.device)
            hidden = self.model(**enc).last_hidden_state
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
            pooled = pooled / pooled.norm(dim=1, keepdim=True)
        return pooled.cpu().numpy().astype(np.float32)
