"""Option settle-price modeling core.

Thin re-export of the compiled extension: tensors with reverse-mode
autodiff, the Adam optimizer, Black-Scholes analytics, the synthetic
data generator, and the evaluation metrics. Training and evaluation
pipelines run through the ``opnn`` command-line tool.
"""

try:
    # Installed layout: the extension sits inside this package.
    from ._opnn import *  # noqa: F401,F403
except ImportError:
    # Build-tree layout: the extension is on sys.path next to the package.
    from _opnn import *  # noqa: F401,F403

__all__ = [
    # tensors and autodiff
    "Tensor", "scalar", "zeros", "ones",
    "matmul", "conv1d", "add", "sub", "mul", "add_scalar", "mul_scalar",
    "sigmoid", "tanh", "add_bcast", "mul_bcast", "concat", "slice",
    "reshape", "sum", "mse_loss",
    "backward", "clear_tape", "tape_size", "no_grad",
    "Adam",
    # Black-Scholes analytics
    "bs_price", "bs_greeks", "implied_vol", "norm_cdf", "norm_pdf",
    # data and metrics
    "generate_csv", "metrics",
]
