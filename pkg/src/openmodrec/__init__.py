"""Open-set RF modulation recognition toolkit.

Synthesizes labeled baseband frames, normalizes them into the paired
[I, Q] / [A, P] matrices, trains a dual-channel LSTM with a softmax +
center-loss objective, and recalibrates logits with per-class Weibull
tails so test examples from never-seen classes can be rejected as
unknown. Deterministic end to end for a given seed.
"""

from .errors import FitError, FormatError, NumericError
from .numcore import AdamState, Rng, adam_step, derive_rng, finite_diff_check, xavier_init
from .siggen import MODULATIONS, GenConfig, SignalFrame, gen_dataset, gen_frame, measure_snr
from .represent import RepresentationPair, as_network_inputs, normalize_frame
from .dataio import SplitSpec, read_frames, split_open_set, write_frames
from .network import (
    Architecture,
    DCLSTMModel,
    dc_backward,
    dc_forward,
    init_model,
    lstm_cell_forward,
    lstm_layer_forward,
    param_count,
)
from .training import (
    TrainConfig,
    TrainLog,
    combined_loss,
    load_checkpoint,
    save_checkpoint,
    train,
    update_centers,
)
from .openset import (
    UNKNOWN_LABEL,
    OpenSetPrediction,
    WeibullTail,
    fit_tails,
    fit_weibull,
    predict_open,
    recalibrate,
    tail_distances,
    weibull_cdf,
    weibull_invf,
)
from .evaluate import EvalReport, accuracy_per_snr, build_report, confusion, export_features, mean_accuracy

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "Architecture",
    "DCLSTMModel",
    "EvalReport",
    "FitError",
    "FormatError",
    "GenConfig",
    "MODULATIONS",
    "NumericError",
    "OpenSetPrediction",
    "RepresentationPair",
    "Rng",
    "SignalFrame",
    "SplitSpec",
    "TrainConfig",
    "TrainLog",
    "UNKNOWN_LABEL",
    "WeibullTail",
    "accuracy_per_snr",
    "adam_step",
    "as_network_inputs",
    "build_report",
    "combined_loss",
    "confusion",
    "dc_backward",
    "dc_forward",
    "derive_rng",
    "export_features",
    "finite_diff_check",
    "fit_tails",
    "fit_weibull",
    "gen_dataset",
    "gen_frame",
    "init_model",
    "load_checkpoint",
    "lstm_cell_forward",
    "lstm_layer_forward",
    "mean_accuracy",
    "measure_snr",
    "normalize_frame",
    "param_count",
    "predict_open",
    "read_frames",
    "recalibrate",
    "save_checkpoint",
    "split_open_set",
    "tail_distances",
    "train",
    "update_centers",
    "weibull_cdf",
    "weibull_invf",
    "write_frames",
    "xavier_init",
]
