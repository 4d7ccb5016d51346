from . import ops
from .gradcheck import check_gradient, finite_difference, relative_error
from .io import decode_tensor, encode_tensor, load_tensor, save_tensor
from .ops import (
    add, bilinear_resize, clip, concat, conv2d, depthwise_conv1d, div, log, matmul, mean,
    mean_pool, mul, relu, reshape, scale, sigmoid, sqrt, sub, sum, transpose,
)
from .tensor import Tape, Tensor, grad

__all__ = [
    "Tape", "Tensor", "grad", "ops", "check_gradient", "finite_difference", "relative_error",
    "encode_tensor", "decode_tensor", "save_tensor", "load_tensor",
    "add", "sub", "mul", "div", "scale", "relu", "sigmoid", "log", "sqrt", "clip", "mean",
    "mean_pool", "matmul", "transpose", "reshape", "concat", "bilinear_resize", "conv2d",
    "depthwise_conv1d",
]
