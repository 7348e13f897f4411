"""Truncated-BPTT training loop, evaluation and checkpoint plumbing."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint, fast
from .config import TrainConfig, config_from_dict
from .data import Corpus, batch_stream, load_corpus, BatchStream
from .layers import LN2
from .model import LanguageModel, count_params, fast_param_count
from .numerics import Rng, backward, derive_seed, precision, recording
from .optim import Adam

log = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "split", "bpc", "lr", "elapsed_s")
LOG_HEADER = "# " + "\t".join(LOG_COLUMNS)


def format_log_line(step: int, split: str, bpc: float, lr: float, elapsed: float) -> str:
    return f"{step}\t{split}\t{bpc:.6f}\t{lr:g}\t{elapsed:.3f}"


def parse_log_line(line: str) -> dict:
    """Parse one metric record; raises ``ValueError`` on schema violations."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != len(LOG_COLUMNS):
        raise ValueError(f"expected {len(LOG_COLUMNS)} fields, got {len(parts)}")
    step, split, bpc, lr, elapsed = parts
    if split not in ("train", "valid"):
        raise ValueError(f"unknown split {split!r}")
    return {"step": int(step), "split": split, "bpc": float(bpc), "lr": float(lr),
            "elapsed_s": float(elapsed)}


def read_log(path) -> list[dict]:
    return [parse_log_line(line) for line in Path(path).read_text().splitlines()
            if line and not line.startswith("#")]


def _state_tensors(state) -> dict[str, np.ndarray]:
    out = {}
    for k, st in enumerate(state):
        if isinstance(st, fast.FastState):
            for key, arr in st.arrays().items():
                out[f"state/{k}/{key}"] = np.asarray(arr)
        else:
            out[f"state/{k}/h"], out[f"state/{k}/c"] = st
    return out


def _restore_state(model: LanguageModel, tensors: dict) -> list:
    state = []
    for k, layer in enumerate(model.layers):
        if isinstance(layer, fast.FastRNNLayer):
            get = lambda key: tensors.get(f"state/{k}/{key}")  # noqa: E731
            state.append(fast.FastState(get("g_i"), get("c_i"), get("g_h"), get("c_h"), get("h")))
        else:
            state.append((tensors[f"state/{k}/h"], tensors[f"state/{k}/c"]))
    return state


def evaluate_model(model: LanguageModel, ids: np.ndarray, batch_size: int, bptt: int,
                   max_chars: int = 0) -> float:
    """Bits per character over ``ids`` with state carried across segments."""
    ids = np.asarray(ids)
    if len(ids) < 2:
        raise ValueError("evaluation split needs at least two symbols")
    bptt = min(bptt, len(ids) - 1)
    batch_size = max(1, min(batch_size, len(ids) // (bptt + 1)))
    stream = BatchStream(ids, batch_size, bptt)
    segments = len(stream)
    if max_chars:
        segments = min(segments, max(1, math.ceil(max_chars / (batch_size * bptt))))
    state = model.initial_state(batch_size)
    total, count = 0.0, 0
    for s in range(segments):
        x, y = stream.batch(s)
        loss, state = model.forward(x, y, state, train=False)
        total += float(loss.value) * y.size
        count += y.size
    return total / count / LN2


@dataclass
class RunResult:
    step: int
    train_bpc: float
    valid_bpc: float
    best_valid_bpc: float
    log_path: Path


class Trainer:
    def __init__(self, config: TrainConfig, corpus: Corpus | None = None,
                 resume: str | Path | None = None):
        self.config = config.validate()
        self.corpus = corpus if corpus is not None else load_corpus(
            config.data.path, config.data.split, config.data.limit or None)
        self.dtype = config.model.dtype
        self.run_dir = Path(config.run.dir)
        self.log_path = self.run_dir / "metrics.tsv"
        with precision(self.dtype):
            self.model = LanguageModel(config.model_spec(self.corpus.vocab_size), config.seed)
            o = config.optim
            self.optimizer = Adam(self.model.parameters(), o.lr, o.beta1, o.beta2, o.eps,
                                  o.clip_norm)
        s = config.schedule
        self.stream = batch_stream(self.corpus, "train", s.batch_size, s.bptt)
        self.drop_rng = Rng(derive_seed(config.seed, "dropout"))
        self.step = 0
        self.best = math.inf
        self.elapsed = 0.0
        self.state = None
        if resume is not None:
            self._resume(resume)

    # -- checkpoints -------------------------------------------------------
    def save_checkpoint(self, path) -> None:
        tensors = {p.name: p.value for p in self.model.parameters()}
        tensors.update({f"buffer/{k}": v for k, v in self.model.buffers().items()})
        tensors.update(self.optimizer.state_tensors())
        if self.state is not None:
            tensors.update(_state_tensors(self.state))
        meta = {p.name: p.meta for p in self.model.parameters() if p.meta}
        checkpoint.save(path, tensors, {
            "config": self.config.to_dict(),
            "step": self.step,
            "adam_t": self.optimizer.t,
            "best_valid_bpc": None if math.isinf(self.best) else self.best,
            "rng": self.drop_rng.state(),
            "stream": self.stream.state(),
            "vocab": self.corpus.vocab_signature(),
            "num_params": self.model.num_params(),
            "elapsed_s": round(self.elapsed, 3),
        }, meta)

    def _resume(self, path) -> None:
        tensors, meta, _ = checkpoint.load(path)
        if meta["vocab"] != self.corpus.vocab_signature():
            raise ValueError("checkpoint vocabulary does not match the corpus")
        for p in self.model.parameters():
            if p.name not in tensors or tensors[p.name].shape != p.value.shape:
                raise ValueError(f"checkpoint is missing or misshapes {p.name}")
            p.value[...] = tensors[p.name]
        self.model.load_buffers({k[len("buffer/"):]: v for k, v in tensors.items()
                                 if k.startswith("buffer/")})
        self.optimizer.load_state(tensors, meta["adam_t"])
        self.drop_rng = Rng.from_state(meta["rng"])
        self.stream.restore(meta["stream"])
        self.step = meta["step"]
        self.best = math.inf if meta["best_valid_bpc"] is None else meta["best_valid_bpc"]
        self.elapsed = meta.get("elapsed_s", 0.0)
        if any(k.startswith("state/") for k in tensors):
            self.state = _restore_state(self.model, tensors)

    # -- loop ----------------------------------------------------------------
    def train_step(self, x, y) -> tuple[float, int]:
        d = self.config.dropout
        with recording() as tape:
            loss, new_state = self.model.forward(
                x, y, self.state, train=True, rng=self.drop_rng,
                drop=(d.ff, d.recurrent, d.output))
        grads = backward(tape, loss)
        self.optimizer.step(grads)
        self.state = new_state
        return float(loss.value), tape.saved_floats("weights")

    def validate(self) -> float:
        s = self.config.schedule
        return evaluate_model(self.model, self.corpus.ids("valid"), s.eval_batch_size,
                              s.bptt, s.eval_chars)

    def run(self) -> RunResult:
        with precision(self.dtype):
            return self._run()

    def _run(self) -> RunResult:
        cfg, s = self.config, self.config.schedule
        self.run_dir.mkdir(parents=True, exist_ok=True)
        fresh_log = self.step == 0
        spec = self.model.spec
        with open(self.log_path, "w" if fresh_log else "a") as fh:
            if fresh_log:
                fh.write(LOG_HEADER + "\n")
                fh.write(f"# params={count_params(spec)} fast_params={fast_param_count(spec)}\n")
            else:
                fh.write(f"# resumed at step {self.step}\n")
            start = time.perf_counter() - self.elapsed
            acc, n, payload = 0.0, 0, 0
            train_bpc = valid_bpc = math.nan
            while self.step < s.steps:
                x, y, fresh = self.stream.next()
                if fresh or self.state is None:
                    self.state = self.model.initial_state(s.batch_size)
                loss, payload = self.train_step(x, y)
                self.step += 1
                acc += loss
                n += 1
                if self.step % s.eval_interval == 0 or self.step == s.steps:
                    self.elapsed = time.perf_counter() - start
                    train_bpc = acc / n / LN2
                    fh.write(format_log_line(self.step, "train", train_bpc, cfg.optim.lr,
                                             self.elapsed) + "\n")
                    valid_bpc = self.validate()
                    self.elapsed = time.perf_counter() - start
                    fh.write(format_log_line(self.step, "valid", valid_bpc, cfg.optim.lr,
                                             self.elapsed) + "\n")
                    fh.flush()
                    log.info("step %d train %.4f valid %.4f bpc (payload %d floats)",
                             self.step, train_bpc, valid_bpc, payload)
                    if valid_bpc < self.best:
                        self.best = valid_bpc
                        self.save_checkpoint(self.run_dir / "best.ckpt")
                    self.save_checkpoint(self.run_dir / f"step{self.step}.ckpt")
                    self.save_checkpoint(self.run_dir / "last.ckpt")
                    acc, n = 0.0, 0
        return RunResult(self.step, train_bpc, valid_bpc, self.best, self.log_path)


def train(config: TrainConfig, corpus: Corpus | None = None, resume=None) -> RunResult:
    return Trainer(config, corpus, resume).run()


def load_model(path) -> tuple[LanguageModel, dict, TrainConfig]:
    """Rebuild the model stored in a checkpoint; returns (model, metadata, config)."""
    tensors, meta, _ = checkpoint.load(path)
    cfg = config_from_dict(meta["config"])
    with precision(cfg.model.dtype):
        model = LanguageModel(cfg.model_spec(len(meta["vocab"])), cfg.seed)
    for p in model.parameters():
        p.value[...] = tensors[p.name]
    model.load_buffers({k[len("buffer/"):]: v for k, v in tensors.items()
                        if k.startswith("buffer/")})
    return model, meta, cfg


def evaluate(checkpoint_path, corpus: Corpus, split: str = "valid",
             batch_size: int | None = None, bptt: int | None = None,
             max_chars: int = 0) -> float:
    model, meta, cfg = load_model(checkpoint_path)
    if meta["vocab"] != corpus.vocab_signature():
        raise ValueError("checkpoint vocabulary does not match the corpus")
    ids = corpus.ids(split)
    if len(ids) == 0:
        raise ValueError(f"split {split!r} is empty")
    with precision(cfg.model.dtype):
        return evaluate_model(model, ids, batch_size or cfg.schedule.eval_batch_size,
                              bptt or cfg.schedule.bptt, max_chars)
