"""Hybrid complex/real-valued 1-D CNN toolkit for spectrum-based signal classification."""

from .data import LabeledDataset, dump_dataset_csv, load_dataset_csv
from .dsp import (
    Signal,
    Spectrum,
    analytic_rotate,
    butterworth_lowpass,
    dft,
    difference,
    expand_half,
    half_spectrum,
    idft,
)
from .errors import (
    CxnetError,
    DataFormatError,
    InvalidConfigError,
    InvalidInputError,
    SymmetryError,
    TrainingError,
)
from .harness import CVPlan, CVReport, build_sim_task, cross_validate, load_uci_csv, make_task
from .model import (
    Model,
    ModelConfig,
    build_baseline_real,
    build_hybrid,
    build_model,
    count_params,
    encode_input,
    load_checkpoint,
    retrain_and_test,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CVPlan",
    "CVReport",
    "CxnetError",
    "DataFormatError",
    "InvalidConfigError",
    "InvalidInputError",
    "LabeledDataset",
    "Model",
    "ModelConfig",
    "Signal",
    "Spectrum",
    "SymmetryError",
    "TrainingError",
    "analytic_rotate",
    "build_baseline_real",
    "build_hybrid",
    "build_model",
    "build_sim_task",
    "butterworth_lowpass",
    "count_params",
    "cross_validate",
    "dft",
    "difference",
    "dump_dataset_csv",
    "encode_input",
    "expand_half",
    "half_spectrum",
    "idft",
    "load_checkpoint",
    "load_dataset_csv",
    "load_uci_csv",
    "make_task",
    "retrain_and_test",
    "save_checkpoint",
    "train",
]
