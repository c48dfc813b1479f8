"""Synthetic needle-sentence corpus and the attention-vs-uniform experiment.

Each generated document has exactly k sentences (the title plus k - 1
abstract sentences). One sentence carries the positive label's unique
evidence token; every other sentence is drawn from a shared distractor
pool, so uniform pooling sees the evidence diluted by 1/k inside
distractor-sampling noise while learned attention can lock onto the
evidence sentence. The paired runs (learned attention, then attention
frozen to uniform, same seed and budget) measure exactly that gap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PatentRecord
from .encoder import ModelDims
from .hashing import token_bucket
from .trainer import LEARNED, UNIFORM, TrainConfig, TrainResult, train

NEEDLE_CODES = ["A01B", "B82Y", "C07D", "D21H", "E04B", "F16K", "G06N", "H04L"]

_FILLERS = [
    "rotor", "flange", "manifold", "coupling", "sensor", "array", "bracket",
    "conduit", "gasket", "spindle", "bearing", "housing", "piston", "valve",
    "clutch", "damper", "nozzle", "turbine", "pulley", "gearbox", "stator",
    "membrane", "filament", "resistor", "inductor", "capacitor", "solenoid",
    "actuator", "linkage", "cam", "ratchet", "sprocket", "shim", "washer",
    "grommet", "ferrule", "bushing", "collar", "keyway", "detent",
]


def evidence_token(label_index: int) -> str:
    return f"zq{label_index}needle"


def _distractor(rng: np.random.Generator, n_words: int = 4) -> str:
    words = [str(w) for w in rng.choice(_FILLERS, size=n_words, replace=True)]
    return " ".join([words[0].capitalize(), *words[1:]]) + "."


def _needle_sentence(label_index: int) -> str:
    # kept minimal so the evidence token dominates the sentence embedding
    return f"{evidence_token(label_index).capitalize()}."


def make_needle_corpus(
    n_docs: int = 64, n_labels: int = 8, k: int = 32, seed: int = 0
) -> list[PatentRecord]:
    """Generate the needle corpus: one evidence sentence per document.

    Document i carries label i mod n_labels; its evidence token appears in
    exactly one of the k sentences, all others are pooled distractors.
    """
    if n_labels > len(NEEDLE_CODES):
        raise ValueError(f"at most {len(NEEDLE_CODES)} labels supported")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_docs):
        label = i % n_labels
        title = _distractor(rng)[:-1]  # title gets its "." from text assembly
        body = [_distractor(rng) for _ in range(k - 1)]
        body[int(rng.integers(0, k - 1))] = _needle_sentence(label)
        records.append(
            PatentRecord(
                id=f"synth{i:03d}",
                title=title,
                abstract=" ".join(body),
                ipc_codes=[f"{NEEDLE_CODES[label]} 1/00"],
            )
        )
    return records


def check_no_bucket_collisions(n_labels: int, v_buckets: int) -> None:
    """Evidence tokens must hash apart from each other and from every filler."""
    evidence = {token_bucket(evidence_token(i), v_buckets) for i in range(n_labels)}
    fillers = {token_bucket(w, v_buckets) for w in _FILLERS}
    if len(evidence) != n_labels or evidence & fillers:
        raise ValueError(f"evidence-token bucket collision at v_buckets={v_buckets}")


def write_jsonl(records: list[PatentRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({
                "id": r.id, "title": r.title, "abstract": r.abstract,
                "description": r.description, "ipc_codes": r.ipc_codes,
            }, ensure_ascii=False) + "\n")


@dataclass
class NeedleOutcome:
    attention_first_perfect_epoch: int | None
    attention_train_micro_f1: float
    ablation_train_micro_f1: float
    gap: float


def needle_config(attention_mode: str = LEARNED, max_epochs: int = 200) -> TrainConfig:
    """Desk-scale configuration used by the paired needle runs."""
    return TrainConfig(
        dims=ModelDims(h=32, c=8, v_buckets=4096, t_max=16, f=32),
        k_max=32,
        encoder="meanpool",
        lr=2e-2,
        batch_size=4,
        max_epochs=max_epochs,
        patience=max_epochs,
        seed=42,
        attention_mode=attention_mode,
        log_train_f1=True,
        stop_at_train_f1=1.0 if attention_mode == LEARNED else None,
    )


def run_needle_experiment(corpus_path: str | Path, max_epochs: int = 200) -> tuple[NeedleOutcome, TrainResult, TrainResult]:
    """Paired runs: learned attention to first perfect fit, uniform to the same epoch.

    Epoch-wise training is Markov in the epoch index for a fixed seed, so
    truncating the ablation at the learned run's first-perfect epoch gives
    the same state a full-budget ablation run would have there.
    """
    attention_run = train(needle_config(LEARNED, max_epochs), corpus_path)
    first_perfect = next(
        (e.epoch for e in attention_run.epochs if e.train_micro_f1 is not None and e.train_micro_f1 >= 1.0),
        None,
    )
    ablation_epochs = first_perfect if first_perfect is not None else max_epochs
    ablation = train(needle_config(UNIFORM, ablation_epochs), corpus_path)
    attention_f1 = attention_run.epochs[-1].train_micro_f1
    abl_f1 = ablation.epochs[-1].train_micro_f1
    outcome = NeedleOutcome(
        attention_first_perfect_epoch=first_perfect,
        attention_train_micro_f1=attention_f1,
        ablation_train_micro_f1=abl_f1,
        gap=attention_f1 - abl_f1,
    )
    return outcome, attention_run, ablation
