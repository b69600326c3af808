"""Accuracy, speed and model-memory evaluation of the three subtractors."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import frame_diff, mog, statistical
from .frame_diff import FrameDiffParams
from .imaging import ClassMask, Frame, GrayFrame, PixelClass, to_grayscale
from .mog import MogParams
from .statistical import StatParams

N_CLASSES = len(PixelClass)

CSV_COLUMNS = ["algo", "class", "precision", "recall", "f1", "fps",
               "per_frame_ms_mean", "per_frame_ms_max", "model_memory_bytes"]
TIMING_COLUMNS = ("fps", "per_frame_ms_mean", "per_frame_ms_max")
BINARY = "binary_foreground"


@dataclass(frozen=True)
class Scores:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def _scores(tp: int, fp: int, fn: int) -> Scores:
    # 2TP / (2TP + FP + FN) is the harmonic mean of precision and recall when
    # both exist, and 0 when there are no true positives
    return Scores(_ratio(tp, tp + fp), _ratio(tp, tp + fn), _ratio(2 * tp, 2 * tp + fp + fn))


@dataclass
class ConfusionMatrix:
    """Pixel counts indexed [ground-truth class, predicted class]."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, predicted: ClassMask, truth: ClassMask) -> None:
        if predicted.shape != truth.shape:
            raise ValueError(f"dimension mismatch: {predicted.shape} vs {truth.shape}")
        idx = truth.labels.astype(np.int64) * N_CLASSES + predicted.labels
        self.counts += np.bincount(idx.ravel(), minlength=N_CLASSES ** 2).reshape(N_CLASSES, N_CLASSES)

    def present(self, cls: PixelClass) -> bool:
        return bool(self.counts[cls, :].sum() or self.counts[:, cls].sum())

    def scores(self, cls: PixelClass) -> Scores:
        tp = int(self.counts[cls, cls])
        fp = int(self.counts[:, cls].sum()) - tp
        fn = int(self.counts[cls, :].sum()) - tp
        return _scores(tp, fp, fn)

    def binary_scores(self) -> Scores:
        """Foreground against everything else; Shadow and Highlight count as background."""
        fg = PixelClass.FOREGROUND
        return self.scores(fg)  # the 4-class foreground row/column is already the binary reduction

    def per_class(self) -> dict[PixelClass, Scores]:
        return {c: self.scores(c) for c in PixelClass if self.present(c)}


@dataclass
class SequenceMetrics:
    per_class: dict = field(default_factory=dict)
    binary: Optional[Scores] = None
    frames_per_second: Optional[float] = None
    per_frame_ms_mean: Optional[float] = None
    per_frame_ms_max: Optional[float] = None
    model_memory_bytes: Optional[int] = None


def evaluate(predicted: Sequence[ClassMask], truth: Sequence[ClassMask]) -> tuple[ConfusionMatrix, SequenceMetrics]:
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(truth)} truth masks")
    cm = ConfusionMatrix()
    for p, t in zip(predicted, truth):
        cm.add(p, t)
    return cm, SequenceMetrics(per_class=cm.per_class(), binary=cm.binary_scores())


# --- algorithm runners ------------------------------------------------------
#
# Each runner consumes a frame list: start() builds the model from the leading
# frames and returns the index of the first frame that gets a mask; step()
# produces the mask for one later frame.

class FrameDiffRunner:
    name = "framediff"

    def __init__(self, params: FrameDiffParams = FrameDiffParams()):
        self.params = params
        self._prev: Optional[GrayFrame] = None

    def start(self, frames: Sequence[Frame]) -> int:
        self._prev = to_grayscale(frames[0])
        return 1

    def step(self, frame: Frame) -> ClassMask:
        cur = to_grayscale(frame)
        mask = frame_diff.frame_difference(self._prev, cur, self.params)
        self._prev = cur
        return mask

    def memory_bytes(self, width: int, height: int) -> int:
        return frame_diff.model_memory_bytes(width, height)


class StatisticalRunner:
    name = "statistical"

    def __init__(self, params: StatParams = StatParams(), train_frames: int = 10):
        if train_frames < 1:
            raise ValueError("train_frames must be >= 1")
        self.params = params
        self.train_frames = train_frames
        self.model: Optional[statistical.StatBackgroundModel] = None

    def start(self, frames: Sequence[Frame]) -> int:
        if len(frames) <= self.train_frames:
            raise ValueError(f"need more than {self.train_frames} frames to train and test")
        self.model = statistical.train(frames[: self.train_frames])
        return self.train_frames

    def step(self, frame: Frame) -> ClassMask:
        return statistical.classify_frame(self.model, frame, self.params)

    def memory_bytes(self, width: int, height: int) -> int:
        return statistical.model_memory_bytes(width, height)


class MogRunner:
    name = "mog"

    def __init__(self, params: MogParams = MogParams()):
        self.params = params
        self.model: Optional[mog.MogModel] = None

    def start(self, frames: Sequence[Frame]) -> int:
        f0 = frames[0]
        self.model = mog.init_model(f0.width, f0.height, f0, self.params)
        return 1

    def step(self, frame: Frame) -> ClassMask:
        return mog.process_frame(self.model, frame)

    def memory_bytes(self, width: int, height: int) -> int:
        return mog.model_memory_bytes(width, height, self.params.k)


Runner = Union[FrameDiffRunner, StatisticalRunner, MogRunner]
ALGORITHMS = {r.name: r for r in (FrameDiffRunner, StatisticalRunner, MogRunner)}


def make_runner(algo: str, params=None, **kwargs) -> Runner:
    try:
        cls = ALGORITHMS[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r} (choose from {', '.join(ALGORITHMS)})") from None
    return cls(params, **kwargs) if params is not None else cls(**kwargs)


def model_memory_bytes(algo: str, width: int, height: int, k: int = 3) -> int:
    if algo == "framediff":
        return frame_diff.model_memory_bytes(width, height)
    if algo == "statistical":
        return statistical.model_memory_bytes(width, height)
    if algo == "mog":
        return mog.model_memory_bytes(width, height, k)
    raise ValueError(f"unknown algorithm {algo!r}")


@dataclass
class RunResult:
    algo: str
    first_index: int  # index of the frame the first mask belongs to
    masks: list
    frame_seconds: list
    metrics: SequenceMetrics


def benchmark(runner: Runner, frames: Sequence[Frame],
              truth: Optional[Sequence[ClassMask]] = None) -> RunResult:
    """Run one algorithm over frames, timing mask production only.

    The first timed frame is a warm-up and is dropped from the speed figures
    unless it is the only one. With ``truth`` (one mask per frame) the
    accuracy part is filled in over the frames that received masks.
    """
    if len(frames) < 2:
        raise ValueError("benchmark needs at least 2 frames")
    if truth is not None and len(truth) != len(frames):
        raise ValueError(f"length mismatch: {len(frames)} frames vs {len(truth)} truth masks")
    first = runner.start(frames)
    masks, seconds = [], []
    for f in frames[first:]:
        t0 = time.perf_counter()
        masks.append(runner.step(f))
        seconds.append(time.perf_counter() - t0)

    timed = seconds[1:] if len(seconds) > 1 else seconds
    total = sum(timed)
    if truth is not None:
        _, metrics = evaluate(masks, truth[first:])
    else:
        metrics = SequenceMetrics()
    metrics.frames_per_second = len(timed) / total if total > 0 else math.inf
    metrics.per_frame_ms_mean = 1000.0 * total / len(timed)
    metrics.per_frame_ms_max = 1000.0 * max(timed)
    metrics.model_memory_bytes = runner.memory_bytes(frames[0].width, frames[0].height)
    return RunResult(runner.name, first, masks, seconds, metrics)


# --- reports ------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metric_rows(algo: str, metrics: SequenceMetrics, per_class: bool = True) -> list[dict]:
    common = {
        "fps": metrics.frames_per_second,
        "per_frame_ms_mean": metrics.per_frame_ms_mean,
        "per_frame_ms_max": metrics.per_frame_ms_max,
        "model_memory_bytes": metrics.model_memory_bytes,
    }
    rows = []
    if per_class:
        for cls, s in metrics.per_class.items():
            rows.append({"algo": algo, "class": cls.name.lower(), "precision": s.precision,
                         "recall": s.recall, "f1": s.f1, **common})
    b = metrics.binary or Scores(None, None, None)
    rows.append({"algo": algo, "class": BINARY, "precision": b.precision,
                 "recall": b.recall, "f1": b.f1, **common})
    return rows


def rows_to_csv(rows: Sequence[dict], exclude: Sequence[str] = ()) -> str:
    cols = [c for c in CSV_COLUMNS if c not in exclude]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in r.items():
            if k in ("algo", "class"):
                row[k] = v
            elif v == "":
                row[k] = None
            elif k == "model_memory_bytes":
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out


def format_table(rows: Sequence[dict], header: str = "") -> str:
    def fmt(c, v):
        if v is None:
            return "-"
        if c in ("precision", "recall", "f1"):
            return f"{v:.4f}"
        if c in TIMING_COLUMNS:
            return f"{v:.2f}"
        return str(v)

    cells = [[fmt(c, r.get(c)) for c in CSV_COLUMNS] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c)
              for i, c in enumerate(CSV_COLUMNS)]
    lines = [header] if header else []
    lines.append("  ".join(c.ljust(w) for c, w in zip(CSV_COLUMNS, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


@dataclass
class CompareReport:
    results: list
    rows: list
    header: str

    def csv(self, exclude: Sequence[str] = ()) -> str:
        return rows_to_csv(self.rows, exclude)

    def table(self) -> str:
        return format_table(self.rows, self.header)


def compare(frames: Sequence[Frame], truth: Sequence[ClassMask],
            runners: Optional[Sequence[Runner]] = None) -> CompareReport:
    """Benchmark every algorithm in turn on one sequence; one binary-foreground row each."""
    if runners is None:
        runners = [FrameDiffRunner(), StatisticalRunner(), MogRunner()]
    results = [benchmark(r, frames, truth) for r in runners]
    rows = [metric_rows(res.algo, res.metrics, per_class=False)[0] for res in results]
    align = ", ".join(f"{res.algo} from frame {res.first_index}" for res in results)
    header = (f"# {len(frames)} frames {frames[0].width}x{frames[0].height}; "
              f"masks scored against truth frames: {align}; "
              "shadow and highlight count as background in binary scores")
    return CompareReport(results, rows, header)
