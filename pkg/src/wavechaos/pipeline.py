"""Pipeline stages behind the CLI: preprocess, chaos-sim, enhance, train,
evaluate, ablate.

One global seed fans out to the stages through ``stage_seed`` (seed XOR the
leading 8 bytes of sha256(stage tag)), so each stage is independently
reproducible. The working directory layout is versioned so partial
pipelines can resume per stage:

    work/v1/preprocessed/   resized, normalized, augmented PGMs + manifest
    work/v1/enhanced/       chaos-enhanced PGMs + manifest (+ diff maps)
    work/v1/checkpoints/    model.ckpt + curves.csv
    work/v1/reports/        evaluation and ablation reports
"""

import csv
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imageio
from .chaos import ChuaParams, integrate
from .crossval import make_folds, run_ablation
from .errors import InvalidInputError, WavechaosError
from .imageio import (
    AUGMENT_OPS,
    AugmentationPlan,
    GrayImage,
    LabeledDataset,
    read_manifest,
    write_manifest,
)
from .metrics import ConfusionMatrix, compute_metrics, format_p, mse_loss, roc_auc
from .modulate import ModulationConfig, difference_map, enhance_image
from .nn import Checkpoint, NetworkSpec, TrainConfig, train, write_curves_csv
from .wavelet import default_cdf97

LAYOUT_VERSION = "v1"
WORKDIR_ENV = "WAVECHAOS_WORKDIR"


def stage_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(tag.encode("ascii")).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & 0x7FFFFFFFFFFFFFFF


@dataclass
class PipelineConfig:
    input_dir: str = "input"
    work_dir: str = "work"
    output_dir: str = "out"
    seed: int = 20240521
    image_size: int = 512
    levels: int = 6
    augment_target: int = 2048
    augment_ops: tuple[str, ...] = AUGMENT_OPS
    scale: float = 0.01
    level_mask: tuple[int, ...] | None = None
    chaos_step: float = 0.005
    chaos_burn_in: int = 10_000
    chaos_initial: tuple[float, float, float] = (0.1, 0.1, 0.1)
    normalize_sequence: bool = False
    chua_alpha: float = 10.814
    chua_beta: float = 14.0
    chua_a: float = 1.3
    chua_b: float = 0.11
    chua_c: float = 7.0
    chua_d: float = 0.0
    conv_channels: tuple[int, ...] = (8, 16, 32)
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    max_epochs: int = 30
    validation_frequency: int = 50
    lr_drop_factor: float = 0.0
    auto_class_weights: bool = True
    folds_k: int = 5
    eval_augmented: bool = False
    write_difference_maps: bool = False

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg._coerce()
        return cfg

    def _coerce(self):
        self.augment_ops = tuple(self.augment_ops)
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.chaos_initial = tuple(float(v) for v in self.chaos_initial)
        if self.level_mask is not None:
            self.level_mask = tuple(int(v) for v in self.level_mask)

    def apply_overrides(self, overrides: list[str]) -> None:
        for item in overrides:
            if "=" not in item:
                raise InvalidInputError(f"--set expects key=value, got {item!r}")
            key, raw = item.split("=", 1)
            key = key.strip()
            if not hasattr(self, key):
                raise InvalidInputError(f"unknown config key {key!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            current = getattr(self, key)
            if isinstance(current, tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(self, key, value)
        self._coerce()

    def validate(self) -> None:
        if self.image_size % (1 << self.levels):
            raise InvalidInputError(
                f"image_size {self.image_size} not divisible by 2^{self.levels}"
            )
        if self.image_size % (1 << len(self.conv_channels)):
            raise InvalidInputError("image_size incompatible with conv block count")
        self.modulation_config()  # validates scale
        self.chua_params()  # validates a > 0

    # config fragments -------------------------------------------------------

    def workdir(self) -> Path:
        root = os.environ.get(WORKDIR_ENV, self.work_dir)
        return Path(root) / LAYOUT_VERSION

    def chua_params(self) -> ChuaParams:
        return ChuaParams(
            alpha=self.chua_alpha,
            beta=self.chua_beta,
            a=self.chua_a,
            b=self.chua_b,
            c=self.chua_c,
            d=self.chua_d,
        )

    def modulation_config(self) -> ModulationConfig:
        from .chaos import ChaosState

        return ModulationConfig(
            scale=self.scale,
            level_mask=frozenset(self.level_mask) if self.level_mask else None,
            chaos_step=self.chaos_step,
            chaos_burn_in=self.chaos_burn_in,
            chaos_initial=ChaosState(*self.chaos_initial),
            normalize_sequence=self.normalize_sequence,
        )

    def network_spec(self) -> NetworkSpec:
        return NetworkSpec(
            input_size=self.image_size, conv_channels=self.conv_channels
        )

    def train_config(self, class_weights=(1.0, 1.0)) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            seed=stage_seed(self.seed, "train"),
            class_weights=class_weights,
            validation_frequency=self.validation_frequency,
            lr_drop_factor=self.lr_drop_factor,
        )

    def class_weights(self, dataset: LabeledDataset):
        if not self.auto_class_weights:
            return (1.0, 1.0)
        from .nn import class_weights_from_frequencies

        return class_weights_from_frequencies(dataset.class_counts)


# --- stages -----------------------------------------------------------------


def load_input_dataset(config: PipelineConfig) -> LabeledDataset:
    """Read the raw input directory: PGM files plus labels.csv."""
    input_dir = Path(config.input_dir)
    labels_path = input_dir / "labels.csv"
    if not labels_path.exists():
        raise InvalidInputError(f"missing labels file {labels_path}")
    dataset = LabeledDataset()
    errors = []
    with open(labels_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["path", "label"]:
            raise InvalidInputError(f"labels.csv must start with path,label columns")
        for row in reader:
            path, label = row[0], row[1]
            source_id = row[2] if len(row) > 2 and row[2] else Path(path).stem
            try:
                raw = imageio.load_pgm(input_dir / path)
                resized = imageio.resize_nearest(raw, config.image_size, config.image_size)
                dataset.items.append(
                    imageio.DatasetItem(
                        image=imageio.normalize(resized),
                        label=label,
                        source_id=source_id,
                    )
                )
            except (WavechaosError, OSError) as err:
                errors.append(f"{path}: {err}")
    if errors:
        raise InvalidInputError(
            "failed to load input files:\n  " + "\n  ".join(errors)
        )
    if not dataset.items:
        raise InvalidInputError(f"no images listed in {labels_path}")
    return dataset


def cmd_preprocess(config: PipelineConfig) -> Path:
    """Resize, normalize and augment the input; write manifest + images."""
    config.validate()
    dataset = load_input_dataset(config)
    plan = AugmentationPlan(
        target_count=config.augment_target,
        seed=stage_seed(config.seed, "preprocess"),
        ops=config.augment_ops,
    )
    augmented = imageio.augment(dataset, plan)
    out_dir = config.workdir() / "preprocessed"
    return write_manifest(augmented, out_dir)


def cmd_chaos_sim(
    config: PipelineConfig,
    out_path,
    duration: float = 100.0,
    step: float | None = None,
    burn_in: int | None = None,
) -> Path:
    """Integrate the default-parameter system and export t,z1,z2,z3 CSV."""
    step = config.chaos_step if step is None else step
    burn_in = config.chaos_burn_in if burn_in is None else burn_in
    n = max(1, int(round(duration / step)))
    traj = integrate(
        config.chaos_initial,
        config.chua_params(),
        step_size=step,
        burn_in=burn_in,
        n_samples=n,
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    times = traj.times()
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "z1", "z2", "z3"))
        for t, (z1, z2, z3) in zip(times, traj.samples):
            writer.writerow(
                (repr(float(t)), repr(float(z1)), repr(float(z2)), repr(float(z3)))
            )
    return out_path


def cmd_enhance(config: PipelineConfig) -> Path:
    """Enhance every preprocessed image; writes PGMs plus the manifest."""
    config.validate()
    manifest = config.workdir() / "preprocessed" / "manifest.csv"
    if not manifest.exists():
        raise InvalidInputError(f"missing {manifest}; run preprocess first")
    dataset = read_manifest(manifest)
    bank = default_cdf97()
    mod = config.modulation_config()
    params = config.chua_params()
    out_dir = config.workdir() / "enhanced"
    out_dir.mkdir(parents=True, exist_ok=True)
    diff_dir = out_dir / "diff"
    if config.write_difference_maps:
        diff_dir.mkdir(exist_ok=True)
    enhanced = LabeledDataset()
    for item in dataset.items:
        pixels = enhance_image(item.image.pixels, bank, config.levels, mod, params)
        image = GrayImage(pixels)
        enhanced.items.append(
            imageio.DatasetItem(
                image=image,
                label=item.label,
                source_id=item.source_id,
                augmented=item.augmented,
            )
        )
        if config.write_difference_maps:
            diff = difference_map(item.image.pixels, pixels)
            imageio.write_matrix_csv(
                diff, diff_dir / f"{item.source_id}_{len(enhanced.items):05d}.csv"
            )
    return write_manifest(enhanced, out_dir)


def _training_arrays(dataset: LabeledDataset):
    aug = [it for it in dataset.items]
    x = np.stack([it.image.pixels for it in aug])[..., None]
    y = np.array([imageio.LABELS.index(it.label) for it in aug], dtype=np.int64)
    originals = dataset.originals()
    xv = np.stack([it.image.pixels for it in originals])[..., None]
    yv = np.array([imageio.LABELS.index(it.label) for it in originals], dtype=np.int64)
    return x, y, xv, yv


def _require_enhanced_manifest(config: PipelineConfig) -> Path:
    manifest = config.workdir() / "enhanced" / "manifest.csv"
    if not manifest.exists():
        raise InvalidInputError(f"missing {manifest}; run enhance first")
    return manifest


def cmd_train(config: PipelineConfig) -> tuple[Path, Path]:
    """Train on the enhanced dataset; writes checkpoint + curves CSV."""
    config.validate()
    dataset = read_manifest(_require_enhanced_manifest(config))
    x, y, xv, yv = _training_arrays(dataset)
    weights = config.class_weights(dataset)
    checkpoint, curves = train(
        x, y, config.network_spec(), config.train_config(weights), xv, yv
    )
    ckpt_dir = config.workdir() / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = ckpt_dir / "model.ckpt"
    curves_path = ckpt_dir / "curves.csv"
    checkpoint.save(ckpt_path)
    write_curves_csv(curves, curves_path)
    return ckpt_path, curves_path


def cmd_evaluate(config: PipelineConfig) -> Path:
    """Score the trained model on the enhanced originals; write reports."""
    config.validate()
    ckpt_path = config.workdir() / "checkpoints" / "model.ckpt"
    if not ckpt_path.exists():
        raise InvalidInputError(f"missing checkpoint {ckpt_path}; run train first")
    dataset = read_manifest(_require_enhanced_manifest(config))
    checkpoint = Checkpoint.load(ckpt_path, config.network_spec())
    network, _ = checkpoint.restore()
    items = dataset.items if config.eval_augmented else dataset.originals()
    x = np.stack([it.image.pixels for it in items])[..., None]
    y = np.array([imageio.LABELS.index(it.label) for it in items], dtype=np.int64)
    probs = network.predict_proba(x)
    preds = probs.argmax(axis=1)
    cm = ConfusionMatrix.from_predictions(preds, y)
    report = compute_metrics(cm)
    roc_points, auc = None, None
    if len(set(y.tolist())) == 2:
        roc_points, auc = roc_auc(probs[:, 1], y)
    report.auc = auc
    report.mse_loss = mse_loss(probs, y)
    payload = {
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "metrics": report.as_dict(),
        "roc": roc_points,
        "n_samples": int(len(y)),
        "eval_augmented": config.eval_augmented,
    }
    out_dir = config.workdir() / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "evaluation.json"
    _write_json(payload, out_path)
    _write_metrics_csv(report, cm, out_dir / "evaluation.csv")
    print(_summary_table("evaluation", report, cm))
    return out_path


def cmd_ablate(config: PipelineConfig) -> Path:
    """Chaos-vs-no-chaos paired comparison from the preprocessed dataset."""
    config.validate()
    manifest = config.workdir() / "preprocessed" / "manifest.csv"
    if not manifest.exists():
        raise InvalidInputError(f"missing {manifest}; run preprocess first")
    dataset = read_manifest(manifest)
    sources = sorted({(it.source_id, it.label) for it in dataset.items})
    plan = make_folds(sources, config.folds_k, stage_seed(config.seed, "folds"))
    weights = config.class_weights(dataset)
    report = run_ablation(
        dataset,
        config.network_spec(),
        config.train_config(weights),
        plan,
        config.modulation_config(),
        config.chua_params(),
        default_cdf97(),
        config.levels,
        eval_augmented=config.eval_augmented,
    )
    out_dir = config.workdir() / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "ablation.json"
    _write_json(report, out_path)
    _write_ablation_csv(report, out_dir / "ablation.csv")
    mc = report["mcnemar"]
    print(
        "ablation: "
        f"without-chaos acc {report['arms']['without_chaos']['mean']['acc']:.2f} | "
        f"with-chaos acc {report['arms']['with_chaos']['mean']['acc']:.2f} | "
        f"mcnemar b={mc['b']} c={mc['c']} p={format_p(mc['p_value'])}"
    )
    return out_path


# --- report writers ---------------------------------------------------------


def _write_json(payload, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_metrics_csv(report, cm, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("metric", "value"))
        for key in ("tp", "fp", "tn", "fn"):
            writer.writerow((key, getattr(cm, key)))
        for key, value in report.as_dict().items():
            writer.writerow((key, "" if value is None else repr(value)))


def _write_ablation_csv(report, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("arm", "fold", "metric", "value"))
        for arm, res in report["arms"].items():
            for fold in res["folds"]:
                for key, value in fold["metrics"].items():
                    writer.writerow(
                        (arm, fold["fold"], key, "" if value is None else repr(value))
                    )
            for key, value in res["mean"].items():
                writer.writerow((arm, "mean", key, "" if value is None else repr(value)))
            for key, value in res["sd"].items():
                writer.writerow((arm, "sd", key, "" if value is None else repr(value)))


def _summary_table(title, report, cm) -> str:
    lines = [f"{title}: tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}"]
    for key, value in report.as_dict().items():
        shown = "undefined" if value is None else f"{value:.4f}"
        lines.append(f"  {key:<10} {shown}")
    return "\n".join(lines)
