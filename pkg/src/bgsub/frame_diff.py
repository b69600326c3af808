"""Consecutive-frame differencing: the previous frame is the background."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imaging import ClassMask, GrayFrame, PixelClass


@dataclass(frozen=True)
class FrameDiffParams:
    threshold: int = 25

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in 0-255, got {self.threshold}")


def frame_difference(prev: GrayFrame, cur: GrayFrame, params: FrameDiffParams) -> ClassMask:
    if prev.shape != cur.shape:
        raise ValueError(f"dimension mismatch: {prev.shape} vs {cur.shape}")
    diff = np.abs(cur.pixels.astype(np.int16) - prev.pixels.astype(np.int16))
    # strict: a difference equal to the threshold stays background
    fg = diff > params.threshold
    return ClassMask(np.where(fg, PixelClass.FOREGROUND, PixelClass.BACKGROUND).astype(np.uint8))


def run_frame_diff(sequence: Sequence[GrayFrame], params: FrameDiffParams) -> list[ClassMask]:
    """Mask k compares frame k+1 with frame k, so the result is one shorter."""
    if len(sequence) < 2:
        raise ValueError("frame differencing needs at least 2 frames")
    return [frame_difference(a, b, params) for a, b in zip(sequence[:-1], sequence[1:])]


def model_memory_bytes(width: int, height: int) -> int:
    # the model is the previous gray frame
    return width * height
