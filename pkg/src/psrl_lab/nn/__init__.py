from .engine import (
    Conv2d,
    ConfigurationError,
    Dense,
    Flatten,
    Layer,
    MaxPool2d,
    Network,
    Param,
    ReLU,
    Tanh,
    Tensor,
    UsageError,
    conv2d_naive,
    mlp,
)
from .gradcheck import GradCheckReport, grad_check
from .losses import (
    categorical_log_prob,
    categorical_log_prob_grad,
    gaussian_entropy_rows,
    gaussian_entropy_rows_grad,
    gaussian_log_prob,
    gaussian_log_prob_grads,
    log_softmax,
    mse,
    mse_grad,
    softmax,
    softmax_entropy,
    softmax_entropy_rows,
    softmax_entropy_rows_grad,
)
from .optim import OptimizerState, optimizer_step

__all__ = [
    "Conv2d", "ConfigurationError", "Dense", "Flatten", "Layer", "MaxPool2d",
    "Network", "Param", "ReLU", "Tanh", "Tensor", "UsageError", "conv2d_naive",
    "mlp", "GradCheckReport", "grad_check", "categorical_log_prob",
    "categorical_log_prob_grad", "gaussian_entropy_rows",
    "gaussian_entropy_rows_grad", "gaussian_log_prob", "gaussian_log_prob_grads",
    "log_softmax", "mse", "mse_grad", "softmax", "softmax_entropy",
    "softmax_entropy_rows", "softmax_entropy_rows_grad", "OptimizerState",
    "optimizer_step",
]
