from ._convolution import convolve_dilated, ppv
from .hydra import HydraTransform
from .minirocket import MiniRocketTransform, kernel_patterns
from .rocket import DilatedKernel, RocketTransform

__all__ = [
    "convolve_dilated",
    "ppv",
    "DilatedKernel",
    "RocketTransform",
    "MiniRocketTransform",
    "kernel_patterns",
    "HydraTransform",
]
