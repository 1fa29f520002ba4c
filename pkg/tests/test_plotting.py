import json

import pytest

from stackgames.experiments import CSV_HEADER
from stackgames.plotting import PlotError, emit_plots, read_curves


def write_curve(path, run_id, seed, points):
    lines = [CSV_HEADER]
    for steps, value in points:
        lines.append(f"{run_id},{seed},{steps},{value},{-1.0}")
    path.write_text("\n".join(lines) + "\n")


def test_emit_plots_empty_inputs_error(tmp_path):
    with pytest.raises(PlotError):
        emit_plots([], tmp_path)
    empty = tmp_path / "empty.csv"
    empty.write_text(CSV_HEADER + "\n")
    with pytest.raises(PlotError):
        emit_plots([empty], tmp_path / "out")


def test_emit_plots_rejects_malformed_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope,nope\n1,2\n")
    with pytest.raises(PlotError):
        emit_plots([bad], tmp_path / "out")


def test_emit_plots_fans_out_per_run(tmp_path):
    for i in range(12):
        for seed in (0, 1):
            write_curve(tmp_path / f"run{i}_seed{seed}.csv", f"run{i}", seed,
                        [(100, -5.0 + i), (200, -4.0 + i)])
    written = emit_plots(sorted(tmp_path.glob("*.csv")), tmp_path / "charts")
    assert len(written) == 12
    for path in written.values():
        assert path.exists() and path.suffix == ".svg"
        assert b"<svg" in path.read_bytes()[:500]


def test_reference_line_comes_from_meta_file(tmp_path):
    write_curve(tmp_path / "solo_seed0.csv", "solo", 0, [(10, 1.0), (20, 2.0)])
    (tmp_path / "solo.meta.json").write_text(json.dumps(
        {"run_id": "solo", "game": "battle of the sexes",
         "scale": "table", "reference_value": 2.0}))
    written = emit_plots([tmp_path / "solo_seed0.csv"], tmp_path / "charts")
    svg = written["solo"].read_text()
    assert "exact Stackelberg value" in svg


def test_read_curves_groups_by_run_and_seed(tmp_path):
    write_curve(tmp_path / "a0.csv", "a", 0, [(1, 0.5)])
    write_curve(tmp_path / "a1.csv", "a", 1, [(1, 0.7)])
    runs = read_curves([tmp_path / "a0.csv", tmp_path / "a1.csv"])
    assert set(runs) == {"a"}
    assert set(runs["a"]) == {0, 1}
