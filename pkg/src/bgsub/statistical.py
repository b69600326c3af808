"""Brightness/chromaticity background subtraction with shadow detection.

Each observed color ``beta`` is split against the expected background color
``alpha`` into a brightness factor ``gamma`` (the scale that brings alpha
closest to beta) and a chromaticity distortion ``delta`` (the residual
distance ``||beta - gamma * alpha||``). Thresholds on the two give the
four-way Background / Shadow / Highlight / Foreground partition.

No per-channel variance normalization is applied; distortions are in raw
8-bit color units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imaging import ClassMask, Frame, PixelClass


@dataclass(frozen=True)
class StatParams:
    tau_delta: float = 10.0
    tau_gamma_lo: float = 0.8
    tau_gamma_hi: float = 1.2
    gamma_min: float = 0.3

    def __post_init__(self):
        if not self.tau_delta >= 0:
            raise ValueError(f"tau_delta must be >= 0, got {self.tau_delta}")
        if not 0 <= self.gamma_min < self.tau_gamma_lo < 1 < self.tau_gamma_hi:
            raise ValueError(
                "need 0 <= gamma_min < tau_gamma_lo < 1 < tau_gamma_hi, got "
                f"{self.gamma_min}, {self.tau_gamma_lo}, {self.tau_gamma_hi}"
            )


@dataclass(frozen=True)
class Distortion:
    gamma: float
    delta: float


@dataclass(frozen=True, eq=False)
class StatBackgroundModel:
    """Expected background color per pixel, float64 shaped (height, width, 3)."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"alpha needs shape (h, w, 3), got {a.shape}")
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError("alpha channels must lie in [0, 255]")
        a.flags.writeable = False
        object.__setattr__(self, "alpha", a)

    @property
    def height(self) -> int:
        return self.alpha.shape[0]

    @property
    def width(self) -> int:
        return self.alpha.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.alpha.shape[:2]

    def memory_bytes(self) -> int:
        return model_memory_bytes(self.width, self.height)


def model_memory_bytes(width: int, height: int, real_bytes: int = 8) -> int:
    return width * height * 3 * real_bytes


def train(frames: Sequence[Frame]) -> StatBackgroundModel:
    """Per-pixel, per-channel arithmetic mean of the (foreground-free) training frames."""
    if len(frames) == 0:
        raise ValueError("training needs at least one frame")
    shape = frames[0].shape
    acc = np.zeros(shape + (3,), dtype=np.float64)
    for f in frames:
        if f.shape != shape:
            raise ValueError(f"dimension mismatch: {f.shape} vs {shape}")
        acc += f.pixels
    return StatBackgroundModel(acc / len(frames))


# --- single-pixel math --------------------------------------------------

def brightness_distortion(alpha, beta) -> float:
    """Minimizer of ||beta - g * alpha||^2 over g, i.e. (beta . alpha) / (alpha . alpha)."""
    a = [float(v) for v in alpha]
    b = [float(v) for v in beta]
    aa = a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
    if aa == 0:
        raise ZeroDivisionError("brightness undefined for a zero expected color")
    return (b[0] * a[0] + b[1] * a[1] + b[2] * a[2]) / aa


def chromaticity_distortion(alpha, beta, gamma: float) -> float:
    r = [float(b) - gamma * float(a) for a, b in zip(alpha, beta)]
    return math.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])


def distortion(alpha, beta) -> Distortion:
    g = brightness_distortion(alpha, beta)
    return Distortion(g, chromaticity_distortion(alpha, beta, g))


def classify_pixel(alpha, beta, params: StatParams) -> PixelClass:
    if all(float(v) == 0 for v in alpha):
        # no brightness direction to project on; judge the raw magnitude
        norm = math.sqrt(sum(float(v) ** 2 for v in beta))
        return PixelClass.BACKGROUND if norm <= params.tau_delta else PixelClass.FOREGROUND
    d = distortion(alpha, beta)
    return _decide(d.gamma, d.delta, params)


def _decide(gamma: float, delta: float, p: StatParams) -> PixelClass:
    if delta > p.tau_delta:
        return PixelClass.FOREGROUND
    if p.tau_gamma_lo <= gamma <= p.tau_gamma_hi:
        return PixelClass.BACKGROUND
    if p.gamma_min <= gamma < p.tau_gamma_lo:
        return PixelClass.SHADOW
    if gamma > p.tau_gamma_hi:
        return PixelClass.HIGHLIGHT
    return PixelClass.FOREGROUND


# --- whole frames ---------------------------------------------------------

def frame_distortion(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized gamma and delta; gamma is NaN where alpha is all zero."""
    beta = beta.astype(np.float64)
    aa = np.einsum("...c,...c->...", alpha, alpha)
    ab = np.einsum("...c,...c->...", alpha, beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(aa > 0, ab / aa, np.nan)
    resid = beta - np.nan_to_num(gamma)[..., None] * alpha
    delta = np.sqrt(np.einsum("...c,...c->...", resid, resid))
    return gamma, delta


def classify_frame(model: StatBackgroundModel, frame: Frame, params: StatParams) -> ClassMask:
    if frame.shape != model.shape:
        raise ValueError(f"dimension mismatch: frame {frame.shape} vs model {model.shape}")
    alpha = model.alpha
    gamma, delta = frame_distortion(alpha, frame.pixels)
    # zero alpha gives gamma NaN and delta = ||beta||, so the same rules apply:
    # NaN fails every band comparison and only the delta test remains
    zero = np.isnan(gamma)
    labels = np.full(gamma.shape, PixelClass.FOREGROUND, dtype=np.uint8)
    close = delta <= params.tau_delta
    labels[close & (gamma > params.tau_gamma_hi)] = PixelClass.HIGHLIGHT
    labels[close & (gamma >= params.gamma_min) & (gamma < params.tau_gamma_lo)] = PixelClass.SHADOW
    labels[close & (gamma >= params.tau_gamma_lo) & (gamma <= params.tau_gamma_hi)] = PixelClass.BACKGROUND
    labels[close & zero] = PixelClass.BACKGROUND
    return ClassMask(labels)


def run_statistical(model: StatBackgroundModel, frames: Sequence[Frame],
                    params: StatParams) -> list[ClassMask]:
    """One mask per frame; the model is never updated."""
    return [classify_frame(model, f, params) for f in frames]
