"""Byte-level corpora, vocabularies and contiguous BPTT batches."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DATA_DIR_ENV = "DCTLM_DATA_DIR"
SPLITS = ("train", "valid", "test")


def resolve_data_path(path) -> Path:
    """Relative paths are looked up under ``$DCTLM_DATA_DIR`` when set."""
    p = Path(path)
    if not p.is_absolute() and not p.exists() and os.environ.get(DATA_DIR_ENV):
        return Path(os.environ[DATA_DIR_ENV]) / p
    return p


def split_boundaries(length: int, weights) -> tuple[int, int]:
    """End offsets of train and valid for proportional split weights.

    Cumulative boundaries are rounded half up.
    """
    weights = [float(w) for w in weights]
    if len(weights) != 3 or min(weights) < 0 or sum(weights) <= 0:
        raise ValueError(f"split needs three non-negative weights, got {weights}")
    total = sum(weights)
    a = math.floor(length * weights[0] / total + 0.5)
    b = math.floor(length * (weights[0] + weights[1]) / total + 0.5)
    return a, b


@dataclass
class Corpus:
    data: bytes
    vocab: dict[int, int]
    bounds: tuple[int, int]
    unk: int | None = None
    _ids: np.ndarray | None = field(default=None, repr=False)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab) + (1 if self.unk is not None else 0)

    def split_bytes(self, split: str) -> bytes:
        a, b = self.bounds
        return {"train": self.data[:a], "valid": self.data[a:b],
                "test": self.data[b:]}[split]

    def ids(self, split: str) -> np.ndarray:
        if self._ids is None:
            table = np.full(256, -1 if self.unk is None else self.unk, dtype=np.int64)
            for byte, idx in self.vocab.items():
                table[byte] = idx
            self._ids = table[np.frombuffer(self.data, dtype=np.uint8)]
        a, b = self.bounds
        return {"train": self._ids[:a], "valid": self._ids[a:b],
                "test": self._ids[b:]}[split]

    def vocab_signature(self) -> list[int]:
        """Byte values in id order; ``-1`` marks the unknown id."""
        out = [0] * self.vocab_size
        for byte, idx in self.vocab.items():
            out[idx] = byte
        if self.unk is not None:
            out[self.unk] = -1
        return out

    def export_vocab(self, path) -> None:
        lines = [f"{byte}\t{idx}" for byte, idx in sorted(self.vocab.items(), key=lambda kv: kv[1])]
        Path(path).write_text("\n".join(lines) + "\n")


def build_corpus(data: bytes, split=(90, 5, 5)) -> Corpus:
    if not data:
        raise ValueError("corpus is empty")
    bounds = split_boundaries(len(data), split)
    train = data[:bounds[0]]
    vocab = {byte: idx for idx, byte in enumerate(sorted(set(train)))}
    unk = len(vocab) if set(data[bounds[0]:]) - set(train) else None
    return Corpus(bytes(data), vocab, bounds, unk)


def load_corpus(path, split=(90, 5, 5), limit: int | None = None) -> Corpus:
    """Read a raw byte file; the vocabulary comes from the training split.

    ``limit`` keeps only the first ``limit`` bytes.
    """
    path = resolve_data_path(path)
    with open(path, "rb") as fh:
        data = fh.read(limit) if limit else fh.read()
    if not data:
        raise ValueError(f"corpus file {path} is empty")
    return build_corpus(data, split)


class BatchStream:
    """Contiguous lanes over one split, read ``T`` steps at a time.

    The split is cut into ``B`` equal stripes (the remainder is dropped);
    segment ``s`` of lane ``b`` covers ``stripe[s*T : s*T + T]`` with targets
    shifted by one.
    """

    def __init__(self, ids: np.ndarray, batch_size: int, bptt: int):
        ids = np.asarray(ids)
        if batch_size < 1 or bptt < 1:
            raise ValueError("batch size and span must be positive")
        if len(ids) < batch_size * (bptt + 1):
            raise ValueError(
                f"split of {len(ids)} symbols is too short for {batch_size} lanes "
                f"of {bptt + 1}")
        self.batch_size = batch_size
        self.bptt = bptt
        lane = len(ids) // batch_size
        self.lanes = ids[:lane * batch_size].reshape(batch_size, lane)
        self.segments = (lane - 1) // bptt
        self.cursor = 0
        self.epoch = 0

    def __len__(self):
        return self.segments

    def batch(self, s: int):
        lo = s * self.bptt
        return (self.lanes[:, lo:lo + self.bptt],
                self.lanes[:, lo + 1:lo + 1 + self.bptt])

    def __iter__(self):
        for s in range(self.segments):
            yield self.batch(s)

    def next(self):
        """Next training batch, cycling forever.

        Returns ``(inputs, targets, fresh)``; ``fresh`` is true when the
        lanes restarted and carried state must be reset.
        """
        fresh = self.cursor == 0
        x, y = self.batch(self.cursor)
        self.cursor += 1
        if self.cursor == self.segments:
            self.cursor = 0
            self.epoch += 1
        return x, y, fresh

    def state(self) -> dict:
        return {"cursor": self.cursor, "epoch": self.epoch}

    def restore(self, state: dict) -> None:
        self.cursor = int(state["cursor"])
        self.epoch = int(state["epoch"])


def batch_stream(corpus: Corpus, split: str, batch_size: int, bptt: int) -> BatchStream:
    return BatchStream(corpus.ids(split), batch_size, bptt)
