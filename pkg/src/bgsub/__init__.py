"""Per-pixel background subtraction: frame differencing, brightness/chromaticity
distortion with shadow detection, and adaptive Gaussian mixtures, with a
synthetic ground-truth generator and benchmark harness."""

from .imaging import ClassMask, Frame, GrayFrame, PixelClass

__version__ = "0.1.0"

__all__ = ["ClassMask", "Frame", "GrayFrame", "PixelClass"]
