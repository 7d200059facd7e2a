"""Transfer tensors, memory kernels and the lossy Jaynes-Cummings atom."""

from ttmkit.jcmodel import ModelParams

__version__ = "0.1.0"

__all__ = ["ModelParams"]
