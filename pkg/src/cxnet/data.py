"""Labeled signal collections shared by the generators, models, and harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import Signal
from .errors import InvalidInputError


@dataclass
class LabeledDataset:
    """Signals with dense integer labels 0..K-1 and per-class display names."""

    signals: list[Signal]
    labels: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if len(self.signals) != self.labels.size:
            raise InvalidInputError("signals and labels must have equal length")
        if self.labels.size == 0:
            raise InvalidInputError("dataset is empty")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise InvalidInputError("labels must be dense indices into class_names")

    def __len__(self) -> int:
        return self.labels.size

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            [self.signals[i] for i in indices], self.labels[indices], list(self.class_names)
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def signal_length(self) -> int:
        lengths = {len(s) for s in self.signals}
        if len(lengths) != 1:
            raise InvalidInputError(f"signals have mixed lengths: {sorted(lengths)}")
        return lengths.pop()


def dump_dataset_csv(dataset: LabeledDataset, path, config_note: str = "") -> None:
    """One row per sample: label first, then samples. Header lines are comments."""
    fs = dataset.signals[0].fs
    with open(path, "w") as fh:
        fh.write(f"# fs={fs}\n")
        fh.write(f"# classes={','.join(dataset.class_names)}\n")
        if config_note:
            fh.write(f"# config={config_note}\n")
        for sig, label in zip(dataset.signals, dataset.labels):
            row = ",".join(format(v, ".17g") for v in sig.samples)
            fh.write(f"{label},{row}\n")


def load_dataset_csv(path) -> LabeledDataset:
    fs = 1.0
    class_names: list[str] = []
    signals: list[Signal] = []
    labels: list[int] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("fs="):
                    fs = float(body[3:])
                elif body.startswith("classes="):
                    class_names = body[len("classes=") :].split(",")
                continue
            parts = line.split(",")
            labels.append(int(parts[0]))
            signals.append(Signal(np.array(parts[1:], dtype=np.float64), fs=fs))
    if not class_names:
        class_names = [str(c) for c in sorted(set(labels))]
    return LabeledDataset(signals, np.array(labels), class_names)
