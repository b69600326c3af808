"""Deterministic synthetic sequences with pixel-exact ground truth.

Frame k is built as: background, times the global illumination for k, times
each active shadow multiplier, objects pasted on top (not dimmed), additive
Gaussian noise, then rounded half away from zero and clamped to 0-255.
Ground truth marks object pixels Foreground, visible shadow pixels Shadow and
everything else Background.

Noise and textures come from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator; normals drawn with numpy's ziggurat method). Textures use their
own seed so changing ``rng_seed`` only changes the noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .imaging import ClassMask, Frame, PixelClass, round_half_away

Color = tuple[int, int, int]
Rect = tuple[int, int, int, int]  # x, y, w, h

TEXTURE_LOW, TEXTURE_HIGH = 50, 200


@dataclass(frozen=True)
class Texture:
    """Per-pixel random colors, channels uniform in [TEXTURE_LOW, TEXTURE_HIGH]."""

    seed: int

    def render(self, height: int, width: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.integers(TEXTURE_LOW, TEXTURE_HIGH + 1, size=(height, width, 3)).astype(np.float64)


Fill = Union[Color, Texture]


@dataclass(frozen=True)
class _Moving:
    rect: Rect
    velocity: tuple[int, int] = (0, 0)
    appear_frame: int = 0
    disappear_frame: Optional[int] = None  # inclusive; None = never
    stop_frame: Optional[int] = None  # motion freezes from this frame on

    def __post_init__(self):
        x, y, w, h = self.rect
        if w < 1 or h < 1:
            raise ValueError(f"rect needs positive size, got {self.rect}")
        if self.disappear_frame is not None and self.appear_frame > self.disappear_frame:
            raise ValueError("appear_frame must not exceed disappear_frame")

    def visible(self, k: int) -> bool:
        return k >= self.appear_frame and (self.disappear_frame is None or k <= self.disappear_frame)

    def rect_at(self, k: int) -> Rect:
        t = k if self.stop_frame is None else min(k, self.stop_frame)
        x, y, w, h = self.rect
        return (x + self.velocity[0] * t, y + self.velocity[1] * t, w, h)


@dataclass(frozen=True)
class ObjectSpec(_Moving):
    fill: Fill = (255, 255, 255)


@dataclass(frozen=True)
class ShadowSpec(_Moving):
    multiplier: float = 0.6

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.multiplier < 1:
            raise ValueError(f"shadow multiplier must be in (0, 1), got {self.multiplier}")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    frame_count: int
    background: Fill = (128, 128, 128)
    objects: tuple[ObjectSpec, ...] = ()
    # one multiplier for the whole sequence, or one per frame
    illumination: Union[float, tuple[float, ...]] = 1.0
    shadow_regions: tuple[ShadowSpec, ...] = ()
    noise_sigma: float = 0.0
    rng_seed: int = 0
    name: str = field(default="scene", compare=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene needs a positive size")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if isinstance(self.illumination, (tuple, list)):
            object.__setattr__(self, "illumination", tuple(float(v) for v in self.illumination))
            if len(self.illumination) != self.frame_count:
                raise ValueError("illumination list needs one value per frame")
        if any(v <= 0 for v in self.illumination_at_all()):
            raise ValueError("illumination multipliers must be > 0")
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "shadow_regions", tuple(self.shadow_regions))

    def illumination_at_all(self) -> tuple[float, ...]:
        if isinstance(self.illumination, tuple):
            return self.illumination
        return (float(self.illumination),) * self.frame_count

    def check_bounds(self) -> None:
        for kind, items in (("object", self.objects), ("shadow", self.shadow_regions)):
            for i, item in enumerate(items):
                for k in range(self.frame_count):
                    if not item.visible(k):
                        continue
                    x, y, w, h = item.rect_at(k)
                    if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
                        raise ValueError(
                            f"{kind} {i} leaves the frame at frame {k}: rect {(x, y, w, h)}"
                        )


def linear_ramp(start: float, end: float, n: int) -> tuple[float, ...]:
    if n == 1:
        return (float(start),)
    return tuple(float(v) for v in np.linspace(start, end, n))


def _fill_array(fill: Fill, height: int, width: int) -> np.ndarray:
    if isinstance(fill, Texture):
        return fill.render(height, width)
    return np.broadcast_to(np.asarray(fill, dtype=np.float64), (height, width, 3))


def generate(spec: SceneSpec) -> tuple[list[Frame], list[ClassMask]]:
    spec.check_bounds()
    h, w = spec.height, spec.width
    background = _fill_array(spec.background, h, w)
    fills = [_fill_array(o.fill, o.rect[3], o.rect[2]) for o in spec.objects]
    illum = spec.illumination_at_all()
    rng = np.random.default_rng(spec.rng_seed)

    frames, masks = [], []
    for k in range(spec.frame_count):
        img = background * illum[k]
        labels = np.full((h, w), PixelClass.BACKGROUND, dtype=np.uint8)
        for s in spec.shadow_regions:
            if s.visible(k):
                x, y, sw, sh = s.rect_at(k)
                img[y:y + sh, x:x + sw] *= s.multiplier
                labels[y:y + sh, x:x + sw] = PixelClass.SHADOW
        for o, fill in zip(spec.objects, fills):
            if o.visible(k):
                x, y, ow, oh = o.rect_at(k)
                img[y:y + oh, x:x + ow] = fill
                labels[y:y + oh, x:x + ow] = PixelClass.FOREGROUND
        if spec.noise_sigma > 0:
            img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
        frames.append(Frame(np.clip(round_half_away(img), 0, 255).astype(np.uint8)))
        masks.append(ClassMask(labels))
    return frames, masks


# --- standard scenarios -----------------------------------------------------

QVGA = (320, 240)


def standard_suite() -> dict[str, SceneSpec]:
    w, h = QVGA
    suite = {
        # 40 px uniform block at +5 px/frame; differencing only sees its two edges
        "uniform_mover": SceneSpec(
            w, h, 56, background=(60, 60, 60),
            objects=(ObjectSpec(rect=(0, 100, 40, 40), velocity=(5, 0), fill=(230, 200, 40)),),
        ),
        # enters at frame 12 (after the default training window), walks right, halts at frame 50
        "stationary_intruder": SceneSpec(
            w, h, 120, background=(60, 60, 60),
            objects=(ObjectSpec(rect=(10, 100, 40, 40), velocity=(3, 0), fill=(200, 50, 50),
                                appear_frame=12, stop_frame=50),),
        ),
        # object with a darkened band under it, entering after 10 clean frames
        "shadow_cast": SceneSpec(
            w, h, 40, background=Texture(11),
            objects=(ObjectSpec(rect=(20, 60, 30, 60), velocity=(4, 0), fill=(200, 40, 40),
                                appear_frame=10),),
            shadow_regions=(ShadowSpec(rect=(20, 120, 60, 30), velocity=(4, 0), multiplier=0.6,
                                       appear_frame=10),),
        ),
        "illumination_ramp": SceneSpec(
            w, h, 60, background=Texture(12), illumination=linear_ramp(1.0, 0.8, 60),
        ),
        "noisy_static": SceneSpec(
            w, h, 40, background=Texture(13), noise_sigma=4.0, rng_seed=13,
        ),
        # 100 noise-free QVGA frames, slow walker plus shadow after 10 clean frames; used for timing
        "qvga_walk": SceneSpec(
            w, h, 100, background=Texture(14),
            objects=(ObjectSpec(rect=(10, 80, 40, 80), velocity=(2, 0), fill=(40, 160, 220),
                                appear_frame=10),),
            shadow_regions=(ShadowSpec(rect=(10, 160, 70, 20), velocity=(2, 0), multiplier=0.6,
                                       appear_frame=10),),
        ),
    }
    return {name: replace(spec, name=name) for name, spec in suite.items()}


# --- key = value spec files ---------------------------------------------------
#
#   width = 320
#   height = 240
#   frame_count = 56
#   background = 60,60,60          (or: texture 11)
#   illumination = 1.0             (or: ramp 1.0 0.8, or one value per frame)
#   noise_sigma = 0
#   rng_seed = 0
#   object.0.rect = 0,100,40,40
#   object.0.velocity = 5,0
#   object.0.fill = 230,200,40     (or: texture 7)
#   object.0.appear = 0
#   object.0.disappear = 55
#   object.0.stop = 50
#   shadow.0.rect / velocity / multiplier / appear / disappear / stop
#
# Blank lines and text after '#' are ignored.

def _ints(text: str, n: int, key: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ValueError(f"{key}: expected {n} integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _fill(text: str, key: str) -> Fill:
    if text.startswith("texture"):
        return Texture(int(text.split()[1]))
    return _ints(text, 3, key)


def _illumination(text: str, frame_count: int):
    parts = text.replace(",", " ").split()
    if parts[0] == "ramp":
        return linear_ramp(float(parts[1]), float(parts[2]), frame_count)
    if len(parts) == 1:
        return float(parts[0])
    return tuple(float(p) for p in parts)


_SCENE_KEYS = {"width", "height", "frame_count", "background", "illumination",
               "noise_sigma", "rng_seed", "name"}
_ITEM_KEYS = {"rect", "velocity", "fill", "appear", "disappear", "stop", "multiplier"}


def parse_spec(text: str) -> SceneSpec:
    top: dict[str, str] = {}
    items: dict[tuple[str, int], dict[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." in key:
            try:
                kind, idx, attr = key.split(".")
                idx = int(idx)
            except ValueError:
                raise ValueError(f"line {lineno}: bad key {key!r}") from None
            if kind not in ("object", "shadow") or attr not in _ITEM_KEYS:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            items.setdefault((kind, idx), {})[attr] = value
        elif key in _SCENE_KEYS:
            top[key] = value
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")

    for req in ("width", "height", "frame_count"):
        if req not in top:
            raise ValueError(f"missing required key {req!r}")
    frame_count = int(top["frame_count"])

    objects, shadows = [], []
    for (kind, idx) in sorted(items):
        fields = items[(kind, idx)]
        key = f"{kind}.{idx}"
        if "rect" not in fields:
            raise ValueError(f"{key}: missing rect")
        common = dict(
            rect=_ints(fields["rect"], 4, key + ".rect"),
            velocity=_ints(fields.get("velocity", "0,0"), 2, key + ".velocity"),
            appear_frame=int(fields.get("appear", 0)),
            disappear_frame=int(fields["disappear"]) if "disappear" in fields else None,
            stop_frame=int(fields["stop"]) if "stop" in fields else None,
        )
        if kind == "object":
            if "multiplier" in fields:
                raise ValueError(f"{key}: objects take no multiplier")
            objects.append(ObjectSpec(fill=_fill(fields.get("fill", "255,255,255"), key), **common))
        else:
            if "fill" in fields:
                raise ValueError(f"{key}: shadows take no fill")
            shadows.append(ShadowSpec(multiplier=float(fields.get("multiplier", 0.6)), **common))

    spec = SceneSpec(
        width=int(top["width"]),
        height=int(top["height"]),
        frame_count=frame_count,
        background=_fill(top.get("background", "128,128,128"), "background"),
        objects=tuple(objects),
        illumination=_illumination(top.get("illumination", "1.0"), frame_count),
        shadow_regions=tuple(shadows),
        noise_sigma=float(top.get("noise_sigma", 0.0)),
        rng_seed=int(top.get("rng_seed", 0)),
        name=top.get("name", "scene"),
    )
    spec.check_bounds()
    return spec


def load_spec(path) -> SceneSpec:
    return parse_spec(Path(path).read_text())


def _fmt_fill(fill: Fill) -> str:
    if isinstance(fill, Texture):
        return f"texture {fill.seed}"
    return ",".join(str(int(c)) for c in fill)


def format_spec(spec: SceneSpec) -> str:
    lines = [
        f"name = {spec.name}",
        f"width = {spec.width}",
        f"height = {spec.height}",
        f"frame_count = {spec.frame_count}",
        f"background = {_fmt_fill(spec.background)}",
    ]
    if isinstance(spec.illumination, tuple):
        lines.append("illumination = " + " ".join(repr(v) for v in spec.illumination))
    else:
        lines.append(f"illumination = {spec.illumination!r}")
    lines += [f"noise_sigma = {spec.noise_sigma!r}", f"rng_seed = {spec.rng_seed}"]

    def moving(prefix: str, m: _Moving) -> list[str]:
        out = [f"{prefix}.rect = " + ",".join(map(str, m.rect)),
               f"{prefix}.velocity = " + ",".join(map(str, m.velocity)),
               f"{prefix}.appear = {m.appear_frame}"]
        if m.disappear_frame is not None:
            out.append(f"{prefix}.disappear = {m.disappear_frame}")
        if m.stop_frame is not None:
            out.append(f"{prefix}.stop = {m.stop_frame}")
        return out

    for i, o in enumerate(spec.objects):
        lines += moving(f"object.{i}", o)
        lines.append(f"object.{i}.fill = {_fmt_fill(o.fill)}")
    for i, s in enumerate(spec.shadow_regions):
        lines += moving(f"shadow.{i}", s)
        lines.append(f"shadow.{i}.multiplier = {s.multiplier!r}")
    return "\n".join(lines) + "\n"


def save_spec(spec: SceneSpec, path) -> None:
    Path(path).write_text(format_spec(spec))


def write_sequence(frames: Sequence[Frame], truth: Sequence[ClassMask], out_dir) -> tuple[Path, Path]:
    """Frames go to <out>/frames/frame_NNNNNN.ppm, truth to <out>/truth/truth_NNNNNN.pgm."""
    from .imaging import save_mask_sequence, save_sequence

    out_dir = Path(out_dir)
    save_sequence(frames, out_dir / "frames", prefix="frame")
    save_mask_sequence(truth, out_dir / "truth", prefix="truth")
    return out_dir / "frames", out_dir / "truth"
