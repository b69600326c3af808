"""Adaptive per-pixel mixture of isotropic RGB Gaussians.

Every pixel keeps K weighted components. A new observation matches a
component when it lies within ``match_sigmas`` standard deviations of its
mean; the closest match (in sigmas) is reinforced and the rest decay. With no
match, the weakest component (lowest w / sigma) is replaced by a wide,
low-weight Gaussian centred on the observation. Components ranked by
w / sigma whose cumulative weight first exceeds ``background_portion`` form
the background.

Two code paths share these rules: ``update_pixel`` works on one
``PixelMixture`` in plain Python, ``process_frame`` runs the same steps on
whole frames with numpy. Both apply the steps in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .imaging import ClassMask, Frame, PixelClass

_NORM3 = (2.0 * math.pi) ** -1.5

# keeps sigma2 > 0 when rho saturates at 1 and the mean lands on the sample
VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class MogParams:
    k: int = 3
    learning_rate: float = 0.05
    match_sigmas: float = 2.5
    background_portion: float = 0.7
    init_variance: float = 900.0
    init_weight: float = 0.05

    def __post_init__(self):
        if not 3 <= self.k <= 5:
            raise ValueError(f"k must be in 3-5, got {self.k}")
        if not 0 < self.learning_rate < 1:
            raise ValueError(f"learning_rate must be in (0, 1), got {self.learning_rate}")
        if not self.match_sigmas > 0:
            raise ValueError(f"match_sigmas must be > 0, got {self.match_sigmas}")
        if not 0 < self.background_portion < 1:
            raise ValueError(f"background_portion must be in (0, 1), got {self.background_portion}")
        if not self.init_variance > 0:
            raise ValueError(f"init_variance must be > 0, got {self.init_variance}")
        if not 0 < self.init_weight < 1:
            raise ValueError(f"init_weight must be in (0, 1), got {self.init_weight}")


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple[float, float, float]
    variance: float

    def __post_init__(self):
        if not 0 <= self.weight <= 1:
            raise ValueError(f"weight must be in [0, 1], got {self.weight}")
        if not self.variance > 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))

    @property
    def rank(self) -> float:
        return self.weight / math.sqrt(self.variance)


@dataclass(frozen=True)
class PixelMixture:
    components: tuple[GaussianComponent, ...] = field(default_factory=tuple)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> list[float]:
        return [c.weight for c in self.components]

    @classmethod
    def initial(cls, x, params: MogParams) -> "PixelMixture":
        mean = tuple(float(v) for v in x)
        comps = [GaussianComponent(1.0, mean, params.init_variance)]
        comps += [GaussianComponent(0.0, mean, params.init_variance) for _ in range(params.k - 1)]
        return cls(tuple(comps))


def gaussian_pdf(x, mu, sigma2: float) -> float:
    """Trivariate normal density with covariance sigma2 * I."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    d2 = sum((float(a) - float(b)) ** 2 for a, b in zip(x, mu))
    return _NORM3 * sigma2 ** -1.5 * math.exp(-d2 / (2.0 * sigma2))


def gaussian_pdf_array(d2: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """Vectorized density from squared distances."""
    return _NORM3 * sigma2 ** -1.5 * np.exp(-d2 / (2.0 * sigma2))


def _dist(x, mu) -> float:
    return math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(x, mu)))


def matches(x, g: GaussianComponent, match_sigmas: float) -> bool:
    return _dist(x, g.mean) <= match_sigmas * math.sqrt(g.variance)


def background_distributions(mixture: PixelMixture, portion: float) -> list[int]:
    """Indices of the background components, best-ranked first."""
    comps = mixture.components
    order = sorted(range(len(comps)), key=lambda j: -comps[j].rank)  # stable: ties keep index order
    chosen = []
    total = 0.0
    for j in order:
        chosen.append(j)
        total += comps[j].weight
        if total > portion:
            break
    return chosen


def update_pixel(mixture: PixelMixture, x, params: MogParams) -> tuple[PixelMixture, PixelClass]:
    x = tuple(float(v) for v in x)
    comps = list(mixture.components)
    lr = params.learning_rate

    # closest component, in sigmas, among those within match_sigmas; empty slots never match
    best, best_score = None, math.inf
    for j, c in enumerate(comps):
        if c.weight > 0 and matches(x, c, params.match_sigmas):
            score = _dist(x, c.mean) / math.sqrt(c.variance)
            if score < best_score:
                best, best_score = j, score

    weights = [(1 - lr) * c.weight + (lr if j == best else 0.0) for j, c in enumerate(comps)]

    if best is not None:
        c = comps[best]
        rho = min(1.0, lr * gaussian_pdf(x, c.mean, c.variance))
        mean = tuple((1 - rho) * m + rho * v for m, v in zip(c.mean, x))
        d2 = sum((v - m) ** 2 for v, m in zip(x, mean))
        var = max(VARIANCE_FLOOR, (1 - rho) * c.variance + rho * d2)
        comps[best] = GaussianComponent(min(weights[best], 1.0), mean, var)
    else:
        ranks = [w / math.sqrt(c.variance) for w, c in zip(weights, comps)]
        weakest = min(range(len(comps)), key=lambda j: ranks[j])
        weights[weakest] = params.init_weight
        comps[weakest] = GaussianComponent(params.init_weight, x, params.init_variance)

    total = sum(weights)
    comps = [replace(c, weight=w / total) for c, w in zip(comps, weights)]
    updated = PixelMixture(tuple(comps))

    if best is None or best not in background_distributions(updated, params.background_portion):
        return updated, PixelClass.FOREGROUND
    return updated, PixelClass.BACKGROUND


# --- whole frames ---------------------------------------------------------

@dataclass(eq=False)
class MogModel:
    """Frame-shaped model: weight (N, K), mean (N, K, 3), variance (N, K), N = h * w."""

    width: int
    height: int
    params: MogParams
    weight: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def mixture(self, row: int, col: int) -> PixelMixture:
        i = row * self.width + col
        return PixelMixture(tuple(
            GaussianComponent(float(self.weight[i, j]), tuple(self.mean[i, j]), float(self.variance[i, j]))
            for j in range(self.params.k)
        ))

    def memory_bytes(self) -> int:
        return model_memory_bytes(self.width, self.height, self.params.k)

    def copy(self) -> "MogModel":
        return MogModel(self.width, self.height, self.params,
                        self.weight.copy(), self.mean.copy(), self.variance.copy())


def model_memory_bytes(width: int, height: int, k: int, real_bytes: int = 8) -> int:
    # weight + 3 mean channels + variance per component
    return width * height * k * 5 * real_bytes


def init_model(width: int, height: int, first_frame: Frame, params: MogParams) -> MogModel:
    if first_frame.shape != (height, width):
        raise ValueError(f"dimension mismatch: frame {first_frame.shape} vs {(height, width)}")
    n, k = width * height, params.k
    x = first_frame.pixels.reshape(n, 3).astype(np.float64)
    weight = np.zeros((n, k))
    weight[:, 0] = 1.0
    mean = np.repeat(x[:, None, :], k, axis=1)
    variance = np.full((n, k), params.init_variance)
    return MogModel(width, height, params, weight, mean, variance)


def process_frame(model: MogModel, frame: Frame) -> ClassMask:
    """Advance every pixel's mixture by one observation (in place) and label it."""
    if frame.shape != model.shape:
        raise ValueError(f"dimension mismatch: frame {frame.shape} vs model {model.shape}")
    p = model.params
    lr = p.learning_rate
    w, mu, var = model.weight, model.mean, model.variance
    n, k = w.shape
    x = frame.pixels.reshape(n, 3).astype(np.float64)
    rows = np.arange(n)

    diff = x[:, None, :] - mu
    d2 = np.einsum("nkc,nkc->nk", diff, diff)
    sd = np.sqrt(var)
    dist = np.sqrt(d2)
    ok = (dist <= p.match_sigmas * sd) & (w > 0)
    score = np.where(ok, dist / sd, np.inf)
    best = np.argmin(score, axis=1)
    matched = ok.any(axis=1)

    w *= 1 - lr
    m_rows, m_best = rows[matched], best[matched]
    w[m_rows, m_best] += lr
    np.minimum(w, 1.0, out=w)

    if m_rows.size:
        old_mu = mu[m_rows, m_best]
        old_var = var[m_rows, m_best]
        rho = np.minimum(1.0, lr * gaussian_pdf_array(d2[m_rows, m_best], old_var))
        new_mu = (1 - rho)[:, None] * old_mu + rho[:, None] * x[m_rows]
        r = x[m_rows] - new_mu
        new_var = (1 - rho) * old_var + rho * np.einsum("nc,nc->n", r, r)
        mu[m_rows, m_best] = new_mu
        var[m_rows, m_best] = np.maximum(new_var, VARIANCE_FLOOR)

    u_rows = rows[~matched]
    if u_rows.size:
        weakest = np.argmin(w[u_rows] / np.sqrt(var[u_rows]), axis=1)
        w[u_rows, weakest] = p.init_weight
        mu[u_rows, weakest] = x[u_rows]
        var[u_rows, weakest] = p.init_variance

    w /= w.sum(axis=1, keepdims=True)

    is_bg = np.zeros(n, dtype=bool)
    if m_rows.size:
        is_bg[m_rows] = _in_background(w[m_rows], var[m_rows], m_best, p.background_portion)
    labels = np.where(is_bg, PixelClass.BACKGROUND, PixelClass.FOREGROUND).astype(np.uint8)
    return ClassMask(labels.reshape(model.height, model.width))


def _in_background(w: np.ndarray, var: np.ndarray, idx: np.ndarray, portion: float) -> np.ndarray:
    """Whether component idx[i] belongs to row i's background set."""
    order = np.argsort(-(w / np.sqrt(var)), axis=1, kind="stable")
    cum = np.cumsum(np.take_along_axis(w, order, axis=1), axis=1)
    over = cum > portion
    # rows where rounding keeps the total at or below portion take every component
    n_bg = np.where(over.any(axis=1), np.argmax(over, axis=1) + 1, w.shape[1])
    position = np.argmax(order == idx[:, None], axis=1)
    return position < n_bg


def run_mog(frames: Sequence[Frame], params: MogParams) -> tuple[MogModel, list[ClassMask]]:
    """Initialise from frames[0] and emit masks for frames[1:]."""
    if len(frames) < 1:
        raise ValueError("mixture model needs at least one frame")
    model = init_model(frames[0].width, frames[0].height, frames[0], params)
    masks = [process_frame(model, f) for f in frames[1:]]
    return model, masks
