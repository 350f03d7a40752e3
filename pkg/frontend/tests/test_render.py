"""Rendering: all five figure kinds, determinism, CLI exit codes."""

import subprocess
import sys
from pathlib import Path

import pytest

from isac_plots import (AxisUnits, EmptyDataError, FigureKind, FigureSpec,
                        render)
from isac_plots.cli import main

DATA = Path(__file__).parent / "data"

KIND_FILES = (
    (FigureKind.REGION, "region.csv"),
    (FigureKind.SWEEP, "sweep.csv"),
    (FigureKind.WATERFILL, "waterfill.csv"),
    (FigureKind.COMPOUND, "compound.csv"),
    (FigureKind.BA_DISTRIBUTIONS, "ba-distributions.csv"),
)


@pytest.mark.parametrize("kind,name", KIND_FILES,
                         ids=[k.value for k, _ in KIND_FILES])
def test_renders_all_kinds(tmp_path, kind, name):
    out = tmp_path / f"{kind.value}.svg"
    render(FigureSpec(DATA / name, kind, out))
    body = out.read_text(encoding="utf-8")
    assert body.lstrip().startswith("<?xml")
    assert "<svg" in body


@pytest.mark.parametrize("kind,name", KIND_FILES,
                         ids=[k.value for k, _ in KIND_FILES])
def test_byte_deterministic(tmp_path, kind, name):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.svg"
        render(FigureSpec(DATA / name, kind, out))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert b"dc:date" not in outs[0]


def test_units_switch_changes_axis_label(tmp_path):
    bodies = {}
    for units in (AxisUnits.NATS, AxisUnits.BITS):
        out = tmp_path / f"{units.value}.svg"
        render(FigureSpec(DATA / "region.csv", FigureKind.REGION, out,
                          axis_units=units))
        bodies[units] = out.read_text(encoding="utf-8")
    assert bodies[AxisUnits.NATS] != bodies[AxisUnits.BITS]


def test_rows_with_blank_rate_are_skipped_not_errors(tmp_path):
    # The strategy rows of a waterfill CSV leave rate or mmse blank; the
    # region renderer must skip them rather than crash or plot zeros.
    out = tmp_path / "r.svg"
    render(FigureSpec(DATA / "region.csv", FigureKind.REGION, out))
    assert out.exists()


def test_renderer_is_import_isolated_from_numerics():
    code = ("import isac_plots, isac_plots.render, isac_plots.cli, sys; "
            "bad = [m for m in sys.modules if m.startswith('isac_limits')]; "
            "sys.exit(1 if bad else 0)")
    proc = subprocess.run([sys.executable, "-c", code])
    assert proc.returncode == 0


class TestCli:
    def test_success(self, tmp_path):
        out = tmp_path / "fig.svg"
        assert main(["--csv", str(DATA / "region.csv"), "--kind", "region",
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_schema_mismatch_exits_2(self, tmp_path, capsys):
        assert main(["--csv", str(DATA / "region.csv"),
                     "--kind", "waterfill",
                     "--out", str(tmp_path / "fig.svg")]) == 2
        assert "schema error" in capsys.readouterr().err

    def test_empty_csv_exits_3(self, tmp_path, capsys):
        header = (DATA / "region.csv").read_text(
            encoding="utf-8").splitlines()[0]
        src = tmp_path / "empty.csv"
        src.write_text(header + "\n", encoding="utf-8")
        assert main(["--csv", str(src), "--kind", "region",
                     "--out", str(tmp_path / "fig.svg")]) == 3
        assert "empty dataset" in capsys.readouterr().err

    def test_bad_kind_rejected(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["--csv", str(DATA / "region.csv"), "--kind", "pie",
                  "--out", str(tmp_path / "fig.svg")])


def test_empty_after_filter_raises(tmp_path):
    # A compound CSV whose only row is the baseline has nothing to sweep.
    src = DATA / "compound.csv"
    lines = src.read_text(encoding="utf-8").splitlines()
    keep = [lines[0]] + [ln for ln in lines[1:] if ",noncoherent," in ln]
    path = tmp_path / "baseline-only.csv"
    path.write_text("\n".join(keep) + "\n", encoding="utf-8")
    with pytest.raises(EmptyDataError):
        render(FigureSpec(path, FigureKind.COMPOUND,
                          tmp_path / "fig.svg"))
