import csv
import json

import numpy as np
import pytest

from wavechaos.cli import main
from wavechaos.errors import InvalidInputError
from wavechaos.imageio import GrayImage, save_pgm
from wavechaos.pipeline import PipelineConfig, stage_seed


@pytest.fixture()
def input_dir(tmp_path):
    """Six tiny sources (3 per class) with a labels CSV."""
    rng = np.random.default_rng(0)
    src = tmp_path / "input"
    src.mkdir()
    rows = []
    tile = (np.indices((40, 40)).sum(axis=0) % 2).astype(np.float64)
    for i in range(3):
        smooth = np.full((40, 40), rng.integers(90, 160), dtype=np.uint8)
        save_pgm(GrayImage(smooth), src / f"b{i}.pgm")
        rows.append((f"b{i}.pgm", "benign", f"b{i}"))
        rough = (127 + (tile - 0.5) * rng.integers(120, 200)).clip(0, 255).astype(np.uint8)
        save_pgm(GrayImage(rough), src / f"m{i}.pgm")
        rows.append((f"m{i}.pgm", "malignant", f"m{i}"))
    with open(src / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("path", "label", "source_id"))
        writer.writerows(rows)
    return src


@pytest.fixture()
def config(tmp_path, input_dir):
    return PipelineConfig(
        input_dir=str(input_dir),
        work_dir=str(tmp_path / "work"),
        output_dir=str(tmp_path / "out"),
        image_size=32,
        levels=3,
        augment_target=24,
        conv_channels=(2, 4),
        batch_size=8,
        max_epochs=2,
        chaos_burn_in=500,
        folds_k=2,
        seed=77,
    )


def overrides(config):
    return [
        "--set", f"input_dir={config.input_dir}",
        "--set", f"work_dir={config.work_dir}",
        "--set", "image_size=32",
        "--set", "levels=3",
        "--set", "augment_target=24",
        "--set", "conv_channels=[2,4]",
        "--set", "batch_size=8",
        "--set", "max_epochs=2",
        "--set", "chaos_burn_in=500",
        "--set", "folds_k=2",
        "--set", "seed=77",
    ]


class TestConfig:
    def test_stage_seed_is_stable_and_distinct(self):
        assert stage_seed(7, "preprocess") == stage_seed(7, "preprocess")
        assert stage_seed(7, "preprocess") != stage_seed(7, "train")
        assert stage_seed(7, "train") != stage_seed(8, "train")

    def test_from_file_and_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"image_size": 64, "levels": 2, "seed": 5}))
        cfg = PipelineConfig.from_file(path)
        assert cfg.image_size == 64
        cfg.apply_overrides(["image_size=128", "conv_channels=[2,2]"])
        assert cfg.image_size == 128
        assert cfg.conv_channels == (2, 2)

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidInputError):
            PipelineConfig.from_dict({"no_such": 1})
        cfg = PipelineConfig()
        with pytest.raises(InvalidInputError):
            cfg.apply_overrides(["nope=1"])

    def test_incompatible_levels_rejected(self):
        cfg = PipelineConfig(image_size=64, levels=8)
        with pytest.raises(InvalidInputError):
            cfg.validate()

    def test_workdir_env_override(self, monkeypatch, tmp_path):
        cfg = PipelineConfig(work_dir="nope")
        monkeypatch.setenv("WAVECHAOS_WORKDIR", str(tmp_path / "env"))
        assert str(cfg.workdir()).startswith(str(tmp_path / "env"))


class TestPreprocess:
    def test_manifest_counts_and_balance(self, config):
        assert main(["preprocess"] + overrides(config)[0:]) == 0
        manifest = config.workdir() / "preprocessed" / "manifest.csv"
        rows = list(csv.reader(manifest.open()))
        assert rows[0] == ["path", "label", "source_id"]
        body = rows[1:]
        assert len(body) == 24
        assert sum(1 for r in body if r[1] == "benign") == 12

    def test_rerun_byte_identical(self, config):
        main(["preprocess"] + overrides(config))
        manifest = config.workdir() / "preprocessed" / "manifest.csv"
        first = manifest.read_bytes()
        images_first = {
            p.name: p.read_bytes()
            for p in (config.workdir() / "preprocessed").glob("*.pgm")
        }
        main(["preprocess"] + overrides(config))
        assert manifest.read_bytes() == first
        for p in (config.workdir() / "preprocessed").glob("*.pgm"):
            assert p.read_bytes() == images_first[p.name]

    def test_empty_input_dir_fails(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        code = main(["preprocess", "--set", f"input_dir={empty}"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_image_listed_in_error(self, input_dir, tmp_path, capsys):
        with open(input_dir / "labels.csv", "a", newline="") as fh:
            csv.writer(fh).writerow(("ghost.pgm", "benign", "ghost"))
        code = main(
            ["preprocess", "--set", f"input_dir={input_dir}",
             "--set", f"work_dir={tmp_path / 'w'}", "--set", "image_size=32",
             "--set", "levels=3", "--set", "augment_target=24"]
        )
        assert code == 1
        assert "ghost.pgm" in capsys.readouterr().err


class TestChaosSim:
    def test_csv_columns_and_rows(self, tmp_path):
        out = tmp_path / "traj.csv"
        code = main(
            ["chaos-sim", "--out", str(out), "--duration", "5", "--burn-in", "100"]
        )
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["t", "z1", "z2", "z3"]
        assert len(rows) - 1 == int(round(5 / 0.005))

    def test_origin_start_all_zero(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(
            ["chaos-sim", "--out", str(out), "--duration", "1",
             "--set", "chaos_initial=[0,0,0]"]
        )
        body = list(csv.reader(out.open()))[1:]
        assert all(float(r[1]) == float(r[2]) == float(r[3]) == 0.0 for r in body)

    def test_bad_step_rejected(self, tmp_path, capsys):
        code = main(["chaos-sim", "--out", str(tmp_path / "t.csv"), "--step", "0.2"])
        assert code == 1

    def test_default_run_visits_wells(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(["chaos-sim", "--out", str(out), "--duration", "100"])
        z1 = np.array([float(r[1]) for r in list(csv.reader(out.open()))[1:]])
        a = 1.3
        inside = z1[np.abs(z1) < 18.2]
        cells = np.floor((inside + a) / (2 * a)).astype(int)
        occupied = {c for c in np.unique(cells) if (cells == c).sum() > 100}
        assert len(occupied) >= 6


class TestEnhanceTrainEvaluateAblate:
    def test_full_pipeline(self, config, capsys):
        ov = overrides(config)
        assert main(["preprocess"] + ov) == 0
        assert main(["enhance"] + ov) == 0
        enhanced = config.workdir() / "enhanced"
        n_images = len(list(enhanced.glob("*.pgm")))
        assert n_images == 24
        assert main(["train"] + ov) == 0
        assert (config.workdir() / "checkpoints" / "model.ckpt").exists()
        assert (config.workdir() / "checkpoints" / "curves.csv").exists()
        assert main(["evaluate"] + ov) == 0
        report = json.loads((config.workdir() / "reports" / "evaluation.json").read_text())
        assert set(report["confusion"]) == {"tp", "fp", "tn", "fn"}
        assert report["n_samples"] == 6
        assert main(["ablate"] + ov) == 0
        ablation = json.loads((config.workdir() / "reports" / "ablation.json").read_text())
        assert set(ablation["arms"]) == {"without_chaos", "with_chaos"}
        assert "mcnemar" in ablation

    def test_enhance_scale_zero_quantization_identity(self, config):
        ov = overrides(config) + ["--set", "scale=0"]
        main(["preprocess"] + ov)
        main(["enhance"] + ov)
        pre = config.workdir() / "preprocessed"
        post = config.workdir() / "enhanced"
        diffs = []
        for p in sorted(pre.glob("*.pgm")):
            a = np.frombuffer(p.read_bytes().split(b"\n255\n", 1)[1], dtype=np.uint8)
            b = np.frombuffer(
                (post / p.name).read_bytes().split(b"\n255\n", 1)[1], dtype=np.uint8
            )
            diffs.append(np.abs(a.astype(int) - b.astype(int)).max())
        assert max(diffs) <= 1  # 8-bit requantization wiggle only

    def test_enhance_rerun_identical(self, config):
        ov = overrides(config)
        main(["preprocess"] + ov)
        main(["enhance"] + ov)
        first = {
            p.name: p.read_bytes() for p in (config.workdir() / "enhanced").glob("*.pgm")
        }
        main(["enhance"] + ov)
        for p in (config.workdir() / "enhanced").glob("*.pgm"):
            assert p.read_bytes() == first[p.name]

    def test_evaluate_without_checkpoint_fails(self, config, capsys):
        ov = overrides(config)
        main(["preprocess"] + ov)
        main(["enhance"] + ov)
        code = main(["evaluate"] + ov)
        assert code == 1
        assert "checkpoint" in capsys.readouterr().err

    def test_enhance_before_preprocess_fails(self, config, capsys):
        assert main(["enhance"] + overrides(config)) == 1
