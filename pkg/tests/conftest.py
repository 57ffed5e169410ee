"""Shared fixtures: a schema-valid synthetic stand-in for the recorded dataset."""

import os

import numpy as np
import pytest

ROWS_PER_CLASS = 2300
SEGMENT_LEN = 178


def write_synthetic_uci(path, rows_per_class=ROWS_PER_CLASS, seed=1234):
    """Write a full-size file in the public dataset's format (header + row ids).

    Values are random integers, so accuracies on it are meaningless; it
    exists to exercise ingestion, protocol, and determinism end to end.
    """
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        fh.write(",".join(["id"] + [f"X{i}" for i in range(1, SEGMENT_LEN + 1)] + ["y"]) + "\n")
        for label in range(1, 6):
            values = rng.integers(-180, 180, size=(rows_per_class, SEGMENT_LEN))
            for r in range(rows_per_class):
                row = ",".join(str(v) for v in values[r])
                fh.write(f"R{label}.{r},{row},{label}\n")
    return path


@pytest.fixture(scope="session")
def synthetic_uci_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("uci") / "synthetic_uci.csv"
    return str(write_synthetic_uci(path))


def real_uci_path():
    """Path to the real recorded-data file, if the environment provides one."""
    candidates = [os.environ.get("CXNET_UCI_CSV"), os.path.join("data", "uci_epilepsy.csv")]
    for cand in candidates:
        if cand and os.path.exists(cand):
            return cand
    return None
