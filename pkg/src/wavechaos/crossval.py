"""Stratified source-level k-fold cross-validation and the chaos ablation.

Folds are assigned to SOURCE images; augmented items inherit their source's
fold, so no derivative of a training image can leak into a validation fold.
Validation folds score the original (non-augmented) images unless
``eval_augmented`` is set.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import imageio
from .chaos import ChuaParams
from .errors import InvalidInputError
from .imageio import LABELS, LabeledDataset
from .metrics import (
    ConfusionMatrix,
    MetricReport,
    compute_metrics,
    mcnemar_test,
    mean_sd,
    mse_loss,
    paired_t_test,
    roc_auc,
    wilcoxon_signed_rank,
)
from .modulate import ModulationConfig, enhance_image
from .nn import NetworkSpec, TrainConfig, train
from .wavelet import FilterBank


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]
    seed: int

    def fold_of(self, source_id: str) -> int:
        return self.assignments[source_id]


def make_folds(sources, k: int, seed: int) -> FoldPlan:
    """Stratified fold assignment at source granularity.

    ``sources`` is a sequence of (source_id, label). Within each class the
    shuffled sources are dealt round-robin, so per-class fold sizes differ
    by at most one.
    """
    if k < 2:
        raise InvalidInputError("k must be >= 2")
    seen: dict[str, str] = {}
    for sid, label in sources:
        if sid in seen and seen[sid] != label:
            raise InvalidInputError(f"source {sid!r} appears with two labels")
        seen[sid] = label
    assignments: dict[str, int] = {}
    for label in LABELS:
        ids = sorted(sid for sid, lab in seen.items() if lab == label)
        if len(ids) < k:
            raise InvalidInputError(
                f"class {label!r} has {len(ids)} sources, needs >= {k}"
            )
        rng = np.random.default_rng([seed & 0x7FFFFFFFFFFFFFFF, LABELS.index(label)])
        for i, idx in enumerate(rng.permutation(len(ids))):
            assignments[ids[idx]] = i % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def check_leakage(dataset: LabeledDataset, plan: FoldPlan) -> None:
    """Raise unless every augmented item sits in its source's fold."""
    for item in dataset.items:
        if item.source_id not in plan.assignments:
            raise InvalidInputError(f"item source {item.source_id!r} missing from plan")
    # fold membership is defined by source_id, so the property is structural;
    # verify the plan covers each source exactly once per class
    folds = set(plan.assignments.values())
    if not folds <= set(range(plan.k)):
        raise InvalidInputError("plan assigns a fold outside 0..k-1")


@dataclass
class FoldOutcome:
    fold: int
    confusion: ConfusionMatrix
    report: MetricReport
    keys: list[str]
    labels: np.ndarray
    preds: np.ndarray
    probs: np.ndarray


@dataclass
class CVResult:
    plan: FoldPlan
    folds: list[FoldOutcome]
    mean: dict[str, float | None]
    sd: dict[str, float | None]

    def pooled(self):
        """Validation predictions pooled across folds in a fixed key order."""
        keys, labels, preds, probs = [], [], [], []
        for f in self.folds:
            keys.extend(f.keys)
            labels.append(f.labels)
            preds.append(f.preds)
            probs.append(f.probs)
        return keys, np.concatenate(labels), np.concatenate(preds), np.concatenate(probs)

    def as_dict(self) -> dict:
        return {
            "k": self.plan.k,
            "seed": self.plan.seed,
            "folds": [
                {
                    "fold": f.fold,
                    "confusion": {
                        "tp": f.confusion.tp,
                        "fp": f.confusion.fp,
                        "tn": f.confusion.tn,
                        "fn": f.confusion.fn,
                    },
                    "metrics": f.report.as_dict(),
                }
                for f in self.folds
            ],
            "mean": self.mean,
            "sd": self.sd,
        }


def _fold_arrays(dataset: LabeledDataset, plan: FoldPlan, fold: int, eval_augmented: bool):
    train_items = [
        it for it in dataset.items if plan.fold_of(it.source_id) != fold
    ]
    val_items = [
        it
        for it in dataset.items
        if plan.fold_of(it.source_id) == fold and (eval_augmented or not it.augmented)
    ]
    if not train_items or not val_items:
        raise InvalidInputError(f"fold {fold} has an empty train or validation side")
    # deterministic presentation order
    val_items = sorted(
        enumerate(val_items), key=lambda pair: (pair[1].source_id, pair[1].augmented, pair[0])
    )
    val_items = [it for _, it in val_items]
    return train_items, val_items


def _to_arrays(items):
    x = np.stack([it.image.pixels for it in items])[..., None]
    y = np.array([LABELS.index(it.label) for it in items], dtype=np.int64)
    return x, y


def cross_validate(
    dataset: LabeledDataset,
    spec: NetworkSpec,
    train_config: TrainConfig,
    plan: FoldPlan,
    eval_augmented: bool = False,
) -> CVResult:
    """Train k models on the fold complement, score each held-out fold."""
    check_leakage(dataset, plan)
    outcomes = []
    for fold in range(plan.k):
        train_items, val_items = _fold_arrays(dataset, plan, fold, eval_augmented)
        x_tr, y_tr = _to_arrays(train_items)
        x_va, y_va = _to_arrays(val_items)
        fold_config = replace(
            train_config, seed=(train_config.seed & 0x7FFFFFFFFFFFFF) * plan.k + fold
        )
        try:
            checkpoint, _ = train(x_tr, y_tr, spec, fold_config)
        except Exception as err:
            err.args = (f"fold {fold}: {err}",)
            raise
        network, _ = checkpoint.restore()
        probs = network.predict_proba(x_va)
        preds = probs.argmax(axis=1)
        cm = ConfusionMatrix.from_predictions(preds, y_va)
        report = compute_metrics(cm)
        try:
            _, report.auc = roc_auc(probs[:, 1], y_va)
        except InvalidInputError:
            report.auc = None
        report.mse_loss = mse_loss(probs, y_va)
        outcomes.append(
            FoldOutcome(
                fold=fold,
                confusion=cm,
                report=report,
                keys=[f"{it.source_id}:{i}" for i, it in enumerate(val_items)],
                labels=y_va,
                preds=preds,
                probs=probs[:, 1],
            )
        )
    mean: dict[str, float | None] = {}
    sd: dict[str, float | None] = {}
    for key in ("acc", "sen", "spe", "precision", "fpr", "f1", "auc", "mse_loss"):
        values = [getattr(f.report, key) for f in outcomes]
        if any(v is None for v in values):
            mean[key] = sd[key] = None
        else:
            mean[key], sd[key] = mean_sd(values)
    return CVResult(plan=plan, folds=outcomes, mean=mean, sd=sd)


def enhance_dataset(
    dataset: LabeledDataset,
    bank: FilterBank,
    levels: int,
    config: ModulationConfig,
    params: ChuaParams,
) -> LabeledDataset:
    """Apply the wavelet/chaos enhancement to every item, in memory."""
    out = LabeledDataset()
    for it in dataset.items:
        enhanced = enhance_image(it.image.pixels, bank, levels, config, params)
        out.items.append(
            imageio.DatasetItem(
                image=imageio.GrayImage(enhanced),
                label=it.label,
                source_id=it.source_id,
                augmented=it.augmented,
            )
        )
    return out


def run_ablation(
    dataset: LabeledDataset,
    spec: NetworkSpec,
    train_config: TrainConfig,
    plan: FoldPlan,
    mod_config: ModulationConfig,
    params: ChuaParams,
    bank: FilterBank,
    levels: int,
    eval_augmented: bool = False,
) -> dict:
    """Paired with-chaos vs without-chaos comparison.

    Both arms share the fold plan and seeds and differ only in the
    modulation scale (the baseline arm runs the wavelet round trip with
    scale = 0). Emits per-arm fold tables plus McNemar, paired-t and
    Wilcoxon results on the pooled validation predictions.
    """
    baseline_cfg = replace(mod_config, scale=0.0)
    arm_results = {}
    for name, cfg in (("without_chaos", baseline_cfg), ("with_chaos", mod_config)):
        enhanced = enhance_dataset(dataset, bank, levels, cfg, params)
        arm_results[name] = cross_validate(
            enhanced, spec, train_config, plan, eval_augmented=eval_augmented
        )
    keys_a, labels_a, preds_a, _ = arm_results["without_chaos"].pooled()
    keys_b, labels_b, preds_b, _ = arm_results["with_chaos"].pooled()
    if keys_a != keys_b or not np.array_equal(labels_a, labels_b):
        raise InvalidInputError("ablation arms are not aligned sample-for-sample")
    mc = mcnemar_test(preds_b, preds_a, labels_a)
    acc_a = [f.report.acc for f in arm_results["without_chaos"].folds]
    acc_b = [f.report.acc for f in arm_results["with_chaos"].folds]
    t_stat, t_p = paired_t_test(acc_b, acc_a)
    w_stat, w_p = wilcoxon_signed_rank(acc_b, acc_a)
    return {
        "arms": {name: res.as_dict() for name, res in arm_results.items()},
        "mcnemar": {
            "b": mc.b,
            "c": mc.c,
            "statistic": mc.statistic,
            "p_value": mc.p_value,
        },
        "paired_t": {"t": t_stat, "p_value": t_p},
        "wilcoxon": {"w": w_stat, "p_value": w_p},
        "n_validation_samples": int(labels_a.size),
    }
