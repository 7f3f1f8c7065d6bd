import csv
import json
from pathlib import Path

import numpy as np
import pytest

from tfec.cli import main
from tfec.dataset import UEA_PROFILES, format_ts
from tfec.synth import two_tone_corpus, write_all_profile_fixtures

FAST = [
    "--override", "epochs=2",
    "--override", "enc_h1=8",
    "--override", "enc_h2=16",
    "--override", "enc_dim=8",
    "--override", "kmeans_restarts=4",
]


@pytest.fixture
def tone_file(tmp_path):
    ds = two_tone_corpus(seed=0, n=12, t=32)
    path = tmp_path / "tones.ts"
    path.write_text(format_ts(ds))
    return path


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestStats:
    def test_profile_fixtures_match_registry(self, tmp_path, capsys):
        fixture_dir = tmp_path / "corpora"
        write_all_profile_fixtures(fixture_dir)
        assert main(["stats", str(fixture_dir)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        got = {}
        for line in out:
            name, n, t, f, classes = line.split("\t")
            got[name] = (int(n), int(t), int(f), int(classes))
        assert got == UEA_PROFILES

    def test_rows_sorted_by_name_for_directory(self, tmp_path, capsys):
        write_all_profile_fixtures(tmp_path / "d")
        main(["stats", str(tmp_path / "d")])
        names = [line.split("\t")[0] for line in capsys.readouterr().out.strip().splitlines()]
        assert names == sorted(names)

    def test_missing_file_exit_two(self, tmp_path, capsys):
        code = main(["stats", str(tmp_path / "nope.ts")])
        assert code == 2
        assert "file not found" in capsys.readouterr().err

    def test_parse_error_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.ts"
        bad.write_text("@problemName x\n@oops 1\n@data\n1,2\n")
        assert main(["stats", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err


class TestTrain:
    def test_single_seed_output_files(self, tone_file, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["train", "--data", str(tone_file), "--out", str(out), *FAST])
        assert code == 0
        for name in ("report.json", "losses.csv", "embeddings.csv", "assignments.csv"):
            assert (out / name).exists()
        assert not list(out.glob("*.tmp"))
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["epochs"] == 2
        assert "ACC=" in capsys.readouterr().err
        rows = _read_csv(out / "losses.csv")
        assert rows[0] == ["epoch", "l_con", "l_recon", "l_total"]
        assert len(rows) == 3

    def test_zero_epochs_header_only_losses(self, tone_file, tmp_path):
        out = tmp_path / "zero"
        main(["train", "--data", str(tone_file), "--out", str(out), *FAST, "--override", "epochs=0"])
        rows = _read_csv(out / "losses.csv")
        assert rows == [["epoch", "l_con", "l_recon", "l_total"]]
        report = json.loads((out / "report.json").read_text())
        assert report["metrics"] is not None

    def test_multi_seed_layout_and_summary(self, tone_file, tmp_path):
        out = tmp_path / "multi"
        code = main(
            ["train", "--data", str(tone_file), "--out", str(out), "--seed", "1,2,3", *FAST]
        )
        assert code == 0
        for seed in (1, 2, 3):
            assert (out / f"seed_{seed}" / "report.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seeds"] == [1, 2, 3]
        for key in ("acc", "nmi", "f1"):
            assert set(summary[key]) == {"mean", "std"}

    def test_rerun_identical_except_wall_clock(self, tone_file, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        args = ["train", "--data", str(tone_file), "--seed", "7", *FAST]
        main(args + ["--out", str(out_a)])
        main(args + ["--out", str(out_b)])
        rep_a = json.loads((out_a / "report.json").read_text())
        rep_b = json.loads((out_b / "report.json").read_text())
        rep_a.pop("wall_clock")
        rep_b.pop("wall_clock")
        assert json.dumps(rep_a, sort_keys=True) == json.dumps(rep_b, sort_keys=True)
        assert (out_a / "embeddings.csv").read_bytes() == (out_b / "embeddings.csv").read_bytes()

    def test_config_file_and_override_precedence(self, tone_file, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"epochs": 5, "beta": 0.25, "enc_h1": 8,
                                        "enc_h2": 16, "enc_dim": 8, "kmeans_restarts": 4}))
        out = tmp_path / "cfgrun"
        main(
            [
                "train", "--config", str(cfg_path), "--data", str(tone_file),
                "--out", str(out), "--override", "epochs=1",
            ]
        )
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["epochs"] == 1
        assert report["config"]["beta"] == 0.25

    def test_invalid_config_listed_all_at_once(self, tone_file, tmp_path, capsys):
        code = main(
            [
                "train", "--data", str(tone_file), "--out", str(tmp_path / "x"),
                "--override", "beta=5", "--override", "mask_ratio=2",
            ]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "beta" in err and "mask_ratio" in err
        assert not (tmp_path / "x").exists()


class TestAblate:
    def test_five_rows_per_seed_with_marker(self, tone_file, tmp_path):
        out = tmp_path / "abl"
        code = main(
            ["ablate", "--data", str(tone_file), "--out", str(out), "--seed", "1,2", *FAST]
        )
        assert code == 0
        rows = _read_csv(out / "ablation.csv")
        header, body = rows[0], rows[1:]
        assert header == [
            "seed", "row", "use_coeh", "use_pgcl", "use_read", "acc", "f1", "nmi", "degraded",
        ]
        assert len(body) == 10
        assert [r[1] for r in body[:5]] == ["full", "no_coeh", "no_pgcl", "no_read", "no_pgcl_no_read"]

    def test_full_row_matches_train(self, tone_file, tmp_path):
        out_t = tmp_path / "t"
        out_a = tmp_path / "a"
        main(["train", "--data", str(tone_file), "--out", str(out_t), "--seed", "5", *FAST])
        main(["ablate", "--data", str(tone_file), "--out", str(out_a), "--seed", "5", *FAST])
        report = json.loads((out_t / "report.json").read_text())
        rows = _read_csv(out_a / "ablation.csv")
        full = rows[1]
        assert float(full[5]) == report["metrics"]["acc"]
        assert float(full[7]) == report["metrics"]["nmi"]


class TestCompareAug:
    def test_six_rows(self, tone_file, tmp_path):
        out = tmp_path / "cmp"
        code = main(
            ["compare-aug", "--data", str(tone_file), "--out", str(out), "--seed", "1,2", *FAST]
        )
        assert code == 0
        rows = _read_csv(out / "compare.csv")
        assert [r[0] for r in rows[1:]] == [
            "coeh", "jitter", "scaling", "permutation", "crop", "mask",
        ]
        assert rows[0][:3] == ["augmentation", "acc_mean", "acc_std"]


class TestSweep:
    def test_grid_outputs_and_leaderboard(self, tone_file, tmp_path):
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "epochs": 1, "enc_h1": 8, "enc_h2": 16, "enc_dim": 8,
                    "kmeans_restarts": 4,
                    "sweep": {"alpha": [0.5, 1.0], "beta": [0.25, 0.75]},
                }
            )
        )
        out = tmp_path / "sweep"
        code = main(
            ["sweep", "--config", str(cfg_path), "--data", str(tone_file), "--out", str(out)]
        )
        assert code == 0
        points = sorted(p.name for p in out.glob("point_*"))
        assert points == ["point_000", "point_001", "point_002", "point_003"]
        rows = _read_csv(out / "leaderboard.csv")
        nmis = [float(r[2]) for r in rows[1:]]
        assert nmis == sorted(nmis, reverse=True)
        best = json.loads((out / "best_config.json").read_text())
        assert best["alpha"] in (0.5, 1.0)
        assert best["beta"] in (0.25, 0.75)

    def test_missing_sweep_section(self, tone_file, tmp_path, capsys):
        cfg_path = tmp_path / "nosweep.json"
        cfg_path.write_text("{}")
        code = main(
            ["sweep", "--config", str(cfg_path), "--data", str(tone_file), "--out", str(tmp_path / "o")]
        )
        assert code == 2


class TestBaseline:
    def test_baseline_csv(self, tone_file, tmp_path):
        out = tmp_path / "base"
        code = main(["baseline", "--data", str(tone_file), "--out", str(out), "--seed", "1,2"])
        assert code == 0
        rows = _read_csv(out / "baseline.csv")
        assert rows[0] == ["seed", "acc", "f1", "nmi"]
        assert len(rows) == 3
