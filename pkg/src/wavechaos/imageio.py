"""Grayscale image I/O, resizing, normalization and dataset augmentation.

Binary PGM (P5, maxval 255) is the interchange format. Raw images carry
uint8 pixels; ``normalize`` divides by 255 and switches to float64 in
[0, 1]. Augmentation operates on normalized images only.
"""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInputError, InvalidStateError

BENIGN = "benign"
MALIGNANT = "malignant"
LABELS = (BENIGN, MALIGNANT)

AUGMENT_OPS = (
    "horizontal_flip",
    "vertical_flip",
    "rotate_90",
    "brightness",
    "vertical_scale",
)
BRIGHTNESS_RANGE = (0.2, 1.0)
VERTICAL_SCALE_FACTOR = 0.5


@dataclass
class GrayImage:
    """A single-channel image; uint8 = raw, float64 = normalized [0,1]."""

    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise InvalidInputError("pixels must be a 2-D array")
        if self.pixels.dtype not in (np.uint8, np.float64):
            raise InvalidInputError(f"unsupported pixel dtype {self.pixels.dtype}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def is_normalized(self) -> bool:
        return self.pixels.dtype == np.float64


def load_pgm(path) -> GrayImage:
    """Read a binary PGM (P5, maxval 255)."""
    data = Path(path).read_bytes()
    return parse_pgm(data)


def parse_pgm(data: bytes) -> GrayImage:
    pos = 0

    def token():
        nonlocal pos
        # skip whitespace and '#' comments, then read one token
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch.isspace():
                pos += 1
            elif ch == b"#":
                nl = data.find(b"\n", pos)
                if nl < 0:
                    raise FormatError("unterminated comment", pos)
                pos = nl + 1
            else:
                break
        if pos >= len(data):
            raise FormatError("unexpected end of header", pos)
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos], start

    magic, off = token()
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})", off)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, off = token()
        try:
            fields.append(int(tok))
        except ValueError:
            raise FormatError(f"bad {name} field {tok!r}", off) from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}", off)
    if maxval != 255:
        raise FormatError(f"maxval must be 255, got {maxval}", off)
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after maxval", pos)
    pos += 1
    need = width * height
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise FormatError(
            f"payload truncated: {len(payload)} of {need} bytes", pos + len(payload)
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels.copy())


def save_pgm(image: GrayImage, path) -> None:
    """Write a binary PGM. Normalized pixels are clamped and quantized."""
    Path(path).write_bytes(encode_pgm(image))


def encode_pgm(image: GrayImage) -> bytes:
    if image.is_normalized:
        raw = np.rint(np.clip(image.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    else:
        raw = image.pixels
    buf = io.BytesIO()
    buf.write(f"P5\n{image.width} {image.height}\n255\n".encode("ascii"))
    buf.write(raw.tobytes())
    return buf.getvalue()


def resize_nearest(image: GrayImage, out_h: int, out_w: int) -> GrayImage:
    """Center-aligned nearest-neighbour resize.

    Output pixel (i, j) copies input pixel
    (floor((i+0.5)*H/out_h), floor((j+0.5)*W/out_w)).
    """
    if out_h < 1 or out_w < 1:
        raise InvalidInputError("output dimensions must be >= 1")
    h, w = image.pixels.shape
    rows = np.minimum((np.floor((np.arange(out_h) + 0.5) * h / out_h)).astype(np.intp), h - 1)
    cols = np.minimum((np.floor((np.arange(out_w) + 0.5) * w / out_w)).astype(np.intp), w - 1)
    return GrayImage(image.pixels[np.ix_(rows, cols)].copy())


def normalize(image: GrayImage) -> GrayImage:
    """Map raw 8-bit pixels to [0, 1] by dividing by 255."""
    if image.is_normalized:
        raise InvalidStateError("image is already normalized")
    return GrayImage(image.pixels.astype(np.float64) / 255.0)


def quantize(image: GrayImage) -> GrayImage:
    """Clamp to [0, 1] and round back to uint8 (inverse of normalize)."""
    if not image.is_normalized:
        raise InvalidStateError("image is not normalized")
    return GrayImage(np.rint(np.clip(image.pixels, 0.0, 1.0) * 255.0).astype(np.uint8))


# --- augmentation ops (normalized images) ---------------------------------


def _require_normalized(image: GrayImage):
    if not image.is_normalized:
        raise InvalidStateError("augmentation requires a normalized image")


def horizontal_flip(image: GrayImage) -> GrayImage:
    _require_normalized(image)
    return GrayImage(image.pixels[:, ::-1].copy())


def vertical_flip(image: GrayImage) -> GrayImage:
    _require_normalized(image)
    return GrayImage(image.pixels[::-1, :].copy())


def rotate_90(image: GrayImage) -> GrayImage:
    _require_normalized(image)
    if image.height != image.width:
        raise InvalidInputError("rotate_90 requires a square image")
    return GrayImage(np.rot90(image.pixels).copy())


def brightness(image: GrayImage, factor: float) -> GrayImage:
    _require_normalized(image)
    lo, hi = BRIGHTNESS_RANGE
    if not (lo <= factor <= hi):
        raise InvalidInputError(f"brightness factor must be in [{lo}, {hi}]")
    return GrayImage(np.clip(image.pixels * factor, 0.0, 1.0))


def vertical_scale(image: GrayImage) -> GrayImage:
    """Squash height by the fixed factor, then edge-pad back to shape."""
    _require_normalized(image)
    h, w = image.pixels.shape
    new_h = max(1, int(round(h * VERTICAL_SCALE_FACTOR)))
    squashed = resize_nearest(image, new_h, w)
    top = (h - new_h) // 2
    bottom = h - new_h - top
    return GrayImage(np.pad(squashed.pixels, ((top, bottom), (0, 0)), mode="edge"))


# --- labelled datasets ------------------------------------------------------


@dataclass
class DatasetItem:
    image: GrayImage
    label: str
    source_id: str
    augmented: bool = False

    def __post_init__(self):
        if self.label not in LABELS:
            raise InvalidInputError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass
class LabeledDataset:
    items: list[DatasetItem] = field(default_factory=list)

    @property
    def class_counts(self) -> tuple[int, int]:
        benign = sum(1 for it in self.items if it.label == BENIGN)
        return benign, len(self.items) - benign

    def originals(self) -> list[DatasetItem]:
        return [it for it in self.items if not it.augmented]

    def by_label(self, label: str) -> list[DatasetItem]:
        return [it for it in self.items if it.label == label]


@dataclass(frozen=True)
class AugmentationPlan:
    target_count: int
    seed: int
    ops: tuple[str, ...] = AUGMENT_OPS

    def __post_init__(self):
        if self.target_count < 1:
            raise InvalidInputError("target_count must be >= 1")
        bad = set(self.ops) - set(AUGMENT_OPS)
        if bad:
            raise InvalidInputError(f"unknown augmentation ops: {sorted(bad)}")
        if not self.ops:
            raise InvalidInputError("at least one augmentation op is required")


def _op_subsets(ops):
    # all subsets of size 1..3, in a fixed canonical order
    ops = sorted(ops, key=AUGMENT_OPS.index)
    subsets = []
    n = len(ops)
    for i in range(n):
        subsets.append((ops[i],))
    for i in range(n):
        for j in range(i + 1, n):
            subsets.append((ops[i], ops[j]))
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                subsets.append((ops[i], ops[j], ops[k]))
    return subsets


def _apply_ops(image: GrayImage, names, rng) -> GrayImage:
    for name in names:
        if name == "horizontal_flip":
            image = horizontal_flip(image)
        elif name == "vertical_flip":
            image = vertical_flip(image)
        elif name == "rotate_90":
            image = rotate_90(image)
        elif name == "brightness":
            lo, hi = BRIGHTNESS_RANGE
            image = brightness(image, float(rng.uniform(lo, hi)))
        elif name == "vertical_scale":
            image = vertical_scale(image)
    return image


def augment(dataset: LabeledDataset, plan: AugmentationPlan) -> LabeledDataset:
    """Grow the dataset to ``target_count`` items, classes balanced.

    Originals are kept; each generated item applies a seeded random subset
    (size 1..3) of the plan's ops to a seeded random source of the needed
    class. Generation is keyed on (seed, class, output index) so results do
    not depend on scheduling.
    """
    if not dataset.items:
        raise InvalidInputError("dataset must be nonempty")
    if plan.target_count < len(dataset.items):
        raise InvalidInputError(
            f"target_count {plan.target_count} < source count {len(dataset.items)}"
        )
    subsets = _op_subsets(plan.ops)
    out = LabeledDataset(items=list(dataset.items))
    base = plan.target_count // len(LABELS)
    extra = plan.target_count % len(LABELS)
    for ci, label in enumerate(LABELS):
        sources = dataset.by_label(label)
        per_class = base + (1 if ci < extra else 0)
        have = len(sources)
        if have > per_class:
            raise InvalidInputError(
                f"class {label!r} already has {have} items, target is {per_class}"
            )
        if have == 0 and per_class > 0:
            raise InvalidInputError(f"class {label!r} has no source images")
        for idx in range(per_class - have):
            rng = np.random.default_rng([plan.seed, ci, idx])
            src = sources[int(rng.integers(len(sources)))]
            names = subsets[int(rng.integers(len(subsets)))]
            img = _apply_ops(src.image, names, rng)
            out.items.append(
                DatasetItem(
                    image=img,
                    label=label,
                    source_id=src.source_id,
                    augmented=True,
                )
            )
    return out


# --- manifests and debug matrices ------------------------------------------


def write_manifest(dataset: LabeledDataset, directory) -> Path:
    """Save every image as PGM plus a path,label,source_id manifest CSV.

    An item is stored as original exactly when its file stem equals its
    source_id; augmented items get sequential aug_* names.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = directory / "manifest.csv"
    rows = []
    aug_counter = 0
    for item in dataset.items:
        if item.augmented:
            name = f"aug_{aug_counter:05d}.pgm"
            aug_counter += 1
        else:
            name = f"{item.source_id}.pgm"
        save_pgm(item.image, directory / name)
        rows.append((name, item.label, item.source_id))
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("path", "label", "source_id"))
        writer.writerows(rows)
    return manifest


def read_manifest(manifest_path) -> LabeledDataset:
    manifest_path = Path(manifest_path)
    directory = manifest_path.parent
    dataset = LabeledDataset()
    with open(manifest_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "label", "source_id"]:
            raise FormatError(f"bad manifest header {header!r} in {manifest_path}")
        for path, label, source_id in reader:
            raw = load_pgm(directory / path)
            dataset.items.append(
                DatasetItem(
                    image=normalize(raw),
                    label=label,
                    source_id=source_id,
                    augmented=Path(path).stem != source_id,
                )
            )
    return dataset


def write_matrix_csv(matrix, path) -> None:
    """Debug dump: one CSV row per matrix row, decimal reals."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([repr(v) for v in row.tolist()])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])
