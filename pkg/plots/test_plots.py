import csv
import hashlib
from pathlib import Path

import numpy as np
import pytest

from plots import FigureSpec, SchemaMismatch, main, overlay_residual, render

SAMPLES = Path(__file__).parent / "sample_data"


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def spec_for(kind, inputs, out, **kw):
    return FigureSpec(kind=kind, inputs=[Path(p) for p in inputs], output=Path(out), **kw)


class TestRenderAllKinds:
    """Acceptance: all four figure kinds render non-empty images from the
    checked-in sample CSVs, and a schema-broken CSV is rejected."""

    def test_fronts(self, tmp_path):
        out = render(spec_for(
            "fronts", [SAMPLES / "trajectory.csv"], tmp_path / "fronts.png",
            cstar=0.26, offset=1.2, threshold=3.1416,
        ))
        assert out.exists() and out.stat().st_size > 1000

    def test_profile_overlay(self, tmp_path):
        out = render(spec_for(
            "profile_overlay",
            [SAMPLES / "snapshots.csv", SAMPLES / "profile.csv"],
            tmp_path / "overlay.png",
        ))
        assert out.exists() and out.stat().st_size > 1000

    def test_speed_curve(self, tmp_path):
        out = render(spec_for("speed_curve", [SAMPLES / "speeds.csv"], tmp_path / "speeds.png"))
        assert out.exists() and out.stat().st_size > 1000

    def test_classification_map(self, tmp_path):
        out = render(spec_for(
            "classification_map",
            [SAMPLES / "trajectory.csv", SAMPLES / "trajectory_vanishing.csv"],
            tmp_path / "map.png",
            threshold=3.1416,
            labels=["spreading", "vanishing"],
        ))
        assert out.exists() and out.stat().st_size > 1000

    def test_schema_broken_csv_rejected(self, tmp_path):
        broken = tmp_path / "broken.csv"
        with open(SAMPLES / "trajectory.csv") as fh:
            rows = list(csv.reader(fh))
        with open(broken, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in rows:
                writer.writerow(row[:2])  # drop h and everything after
        with pytest.raises(SchemaMismatch, match="h"):
            render(spec_for("fronts", [broken], tmp_path / "x.png"))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(SchemaMismatch, match="not found"):
            render(spec_for("fronts", [tmp_path / "nope.csv"], tmp_path / "x.png"))


class TestContracts:
    def test_inputs_never_mutated(self, tmp_path):
        before = sha(SAMPLES / "trajectory.csv")
        render(spec_for("fronts", [SAMPLES / "trajectory.csv"], tmp_path / "f.png"))
        assert sha(SAMPLES / "trajectory.csv") == before

    def test_collision_appends_suffix(self, tmp_path):
        target = tmp_path / "fig.png"
        first = render(spec_for("fronts", [SAMPLES / "trajectory.csv"], target))
        second = render(spec_for("fronts", [SAMPLES / "trajectory.csv"], target))
        assert first == target
        assert second == tmp_path / "fig-1.png"
        assert first.exists() and second.exists()

    def test_self_overlay_residual_is_zero(self, tmp_path):
        # build a snapshot that equals the front-aligned profile exactly
        rows = np.genfromtxt(SAMPLES / "profile.csv", delimiter=",", names=True)
        z, q = rows["z"], rows["q"]
        g, h = -2.0, 10.0
        x = g + np.linspace(0.0, 1.0, 301) * (h - g)
        w = np.interp(h - x, z, q, left=0.0, right=q[-1])
        snap_csv = tmp_path / "snap.csv"
        with open(snap_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "g", "h"] + [f"w_{j}" for j in range(301)])
            writer.writerow([repr(float(v)) for v in [5.0, g, h] + list(w)])
        assert overlay_residual((5.0, g, h, w), z, q) == 0.0
        out = render(spec_for("profile_overlay", [snap_csv, SAMPLES / "profile.csv"], tmp_path / "o.png"))
        assert out.exists() and out.stat().st_size > 1000

    def test_speed_samples_decrease_with_delay(self, tmp_path):
        # the checked-in sweep runs over increasing delay: speeds must fall
        rows = np.genfromtxt(SAMPLES / "speeds.csv", delimiter=",", names=True)
        assert np.all(np.diff(rows["cstar"]) < 0)
        out = render(spec_for("speed_curve", [SAMPLES / "speeds.csv"], tmp_path / "s.png"))
        assert out.exists()


class TestCli:
    def test_main_renders_and_echoes_path(self, tmp_path, capsys):
        code = main([
            "fronts", str(SAMPLES / "trajectory.csv"),
            "-o", str(tmp_path / "cli.png"), "--cstar", "0.26",
        ])
        assert code == 0
        assert str(tmp_path / "cli.png") in capsys.readouterr().out

    def test_main_schema_error_exit_code(self, tmp_path, capsys):
        code = main([
            "speed_curve", str(SAMPLES / "trajectory.csv"),
            "-o", str(tmp_path / "bad.png"),
        ])
        assert code == 1
        assert "missing column" in capsys.readouterr().err
