"""Acoustic encoders producing one unit-norm vector per audio clip.

The default backend computes a log-mel spectrogram with plain numpy
signal processing and mean-pools it over frames, giving a deterministic
fixed-dimensional summary of spectral shape. The ``wav2vec2`` backend
mean-pools the last hidden layer of a named pretrained speech model when
that stack is available.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .text import ModelLoadError


class AudioReadError(Exception):
    pass


def read_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """Load a PCM WAV file as float64 samples in [-1, 1], averaged to mono."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav_file:
            n_channels = wav_file.getnchannels()
            width = wav_file.getsampwidth()
            rate = wav_file.getframerate()
            frames = wav_file.getnframes()
            payload = wav_file.readframes(frames)
    except (OSError, wave.Error, EOFError) as exc:
        raise AudioReadError(f"{path}: unreadable audio: {exc}") from exc
    if width != 2:
        raise AudioReadError(f"{path}: only 16-bit PCM is supported, got width {width}")
    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    if samples.size == 0:
        raise AudioReadError(f"{path}: zero-length audio")
    return samples, rate


def _mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((n_fft + 1) * hz_points / rate).astype(int)
    bank = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(1, n_mels + 1):
        left, center, right = bins[m - 1], bins[m], bins[m + 1]
        for k in range(left, center):
            if center > left:
                bank[m - 1, k] = (k - left) / (center - left)
        for k in range(center, right):
            if right > center:
                bank[m - 1, k] = (right - k) / (right - center)
    return bank


class LogMelEncoder:
    """Mean-pooled log-mel spectral summary (25 ms window, 10 ms hop)."""

    name = "logmel-v1"

    def __init__(self, n_mels: int = 64):
        if n_mels < 2:
            raise ValueError("n_mels must be at least 2")
        self.n_mels = n_mels
        self.dim = n_mels

    def encode_path(self, path: str | Path) -> np.ndarray:
        samples, rate = read_wav_mono(path)
        win = max(16, int(round(rate * 0.025)))
        hop = max(8, int(round(rate * 0.010)))
        if samples.size < win:  # pad very short clips to one full window
            samples = np.pad(samples, (0, win - samples.size))
        n_frames = 1 + (samples.size - win) // hop
        idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
        frames = samples[idx] * np.hanning(win)[None, :]
        power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
        mel = power @ _mel_filterbank(self.n_mels, win, rate).T
        pooled = np.log(mel + 1e-10).mean(axis=0)
        norm = np.linalg.norm(pooled)
        if norm == 0.0:
            raise AudioReadError(f"{path}: degenerate spectrum")
        return (pooled / norm).astype(np.float32)

    def encode_batch(self, paths: list[str | Path]) -> np.ndarray:
        return np.stack([self.encode_path(p) for p in paths])


class Wav2Vec2Encoder:
    """Mean-pooled last hidden state of a pretrained speech model."""

    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from transformers import AutoFeatureExtractor, AutoModel
        except ImportError as exc:
            raise ModelLoadError(f"wav2vec2 backend unavailable: {exc}") from exc
        try:
            self.processor = AutoFeatureExtractor.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name).to(device).eval()
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_name!r}: {exc}") from exc
        self.name = f"wav2vec2:{model_name}"
        self.device = device
        self.dim = int(self.model.config.hidden_size)

    def encode_batch(self, paths: list[str | Path]) -> np.ndarray:
        import torch

        rows = []
        for path in paths:
            samples, rate = read_wav_mono(path)
            inputs = self.processor(
                samples, sampling_rate=rate, return_tensors="pt"
            ).to(self.device)
            with torch.no_grad():
                hidden = self.model(**inputs).last_hidden_state[0]
                pooled = hidden.mean(dim=0)
                pooled = pooled / pooled.norm()
            rows.append(pooled.cpu().numpy().astype(np.float32))
        return np.stack(rows)
