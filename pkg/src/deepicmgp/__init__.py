"""Two-layer deep Gaussian-process surrogate built from intrinsic coregionalization layers."""

from . import backend
from .acquisition import AcquisitionConfig, AcquisitionResult, design_loop, select_next
from .baseline import alc_indep, fit_indep, predict_indep
from .benchfns import evaluate as evaluate_benchmark
from .benchfns import spec as benchmark_spec
from .bundle import load_chain, save_chain
from .data import Dataset
from .doe import grid, maximin_lhd, rescale
from .errors import (
    DataError,
    DeepIcmError,
    DegenerateLikelihoodError,
    DomainError,
    EmptyCandidateError,
    FactorizationError,
    ShapeError,
    UnknownFunctionError,
)
from .metrics import MetricReport, crps_gaussian, evaluate, mv_log_score, rmse
from .predictor import Prediction, predict
from .sampler import Chain, ChainSample, ModelSpec, SamplerConfig, run_chain

__version__ = "0.1.0"
