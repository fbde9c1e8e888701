"""Variational phasor circuits on the unit-circle torus."""

from .autodiff import Cotangent, GradReport, backward, backward_many, grad_check
from .core import (
    CircuitSpec,
    GateLayer,
    PhasorState,
    apply_mix_layer,
    apply_mix_pair,
    apply_normalize,
    apply_shift,
    deep_circuit,
    deep_stack,
    forward,
    forward_many,
    is_on_torus,
    param_count,
    resolve_circuit,
    single_stack,
    state_from_phases,
)
from .datagen import Dataset, GenSpec, SplitSpec, class_template, generate, stratified_split
from .encoding import Snapshot, encode, phase_encode, zscore
from .errors import (
    ConfigError,
    ConstantSnapshotError,
    DegenerateAmplitudeError,
    DimensionError,
    DivergenceError,
    InvalidInputError,
    InvalidSplitError,
    VPCError,
)
from .experiments import RunConfig, run_experiment
from .kernels import BACKEND
from .readout import (
    ConfusionMatrix,
    accuracy,
    binary_prob,
    confusion,
    cross_entropy,
    multiclass_logits,
    predict,
    softmax,
)
from .training import MlpSpec, TrainConfig, TrainReport, adam_fit, derivative_free_fit, evaluate, fit, mlp_fit

__version__ = "0.1.0"
