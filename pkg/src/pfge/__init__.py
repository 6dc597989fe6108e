"""Snapshot-ensemble training and analysis on a minimal numpy MLP.

The package trains three related algorithms over one cyclical learning-rate
trajectory: a running weight average (swa), an ensemble of raw cycle-end
snapshots (fge), and an ensemble of successively chained weight averages
(pfge). Around these sit calibration metrics, Bezier-curve mode-connectivity
analysis, dataset utilities, and a reproducible experiment harness.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .connectivity import (
    CurveProfile,
    CurveSpec,
    bernstein,
    curve_point,
    initial_curve,
    mc_value,
    profile_curve,
    train_curve,
)
from .data import (
    BatchStream,
    Dataset,
    apply_standardization,
    batches,
    feature_stats,
    gen_blobs,
    gen_two_spirals,
    load_csv,
    load_idx,
    save_csv,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    InvalidArgumentError,
    NumericError,
    PfgeError,
    ShapeError,
)
from .metrics import PredictionBatch, ReliabilityBins, accuracy, ece, nll, reliability
from .nn import (
    Batch,
    LayerSpec,
    LossValue,
    ModelWeights,
    forward,
    init_model,
    linear_combine,
    loss_and_grad,
    mean_loss,
    softmax,
)
from .schedule import BudgetSpec, LrSchedule, lr_at, validate_budget
from .training import (
    EnsembleSet,
    MomentumState,
    RunTrace,
    ensemble_predict,
    run_fge,
    run_pfge,
    run_swa,
    running_average_update,
    sgd_step,
)

__version__ = "0.1.0"
