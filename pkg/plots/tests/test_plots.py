import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import plots  # noqa: E402

SAMPLE = Path(__file__).resolve().parents[1] / "sample"
CSVS = sorted(str(p) for p in SAMPLE.glob("series_*.csv"))


def spec(kind, **kw):
    return plots.FigureSpec(kind=kind, **kw)


def test_convergence_renders_deterministically(tmp_path):
    s = spec("convergence", inputs=CSVS, summary=str(SAMPLE / "summary.json"),
             out=str(tmp_path / "a.png"))
    plots.render(s)
    s2 = spec("convergence", inputs=CSVS, summary=str(SAMPLE / "summary.json"),
              out=str(tmp_path / "b.png"))
    plots.render(s2)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_convergence_includes_boundary_mean_reference():
    s = spec("convergence", inputs=CSVS, summary=str(SAMPLE / "summary.json"))
    fig = plots.build_figure(s)
    ref = [l for l in fig.axes[0].get_lines() if l.get_label() == plots.REFERENCE_LABEL]
    assert len(ref) == 1
    assert np.allclose(ref[0].get_ydata(), 4.0 * (1.0 - 0.5))  # K(1 - eps^2/2)


def test_convergence_without_summary_has_no_reference():
    fig = plots.build_figure(spec("convergence", inputs=CSVS))
    labels = [l.get_label() for l in fig.axes[0].get_lines()]
    assert plots.REFERENCE_LABEL not in labels
    assert len(labels) == len(CSVS)


def test_empty_csv_raises(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("t,x,avg_x\n")
    with pytest.raises(plots.EmptyInput):
        plots.build_figure(spec("convergence", inputs=[str(p)]))


def test_missing_average_column_raises(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x\n0,1\n1,2\n")
    with pytest.raises(plots.MissingColumn):
        plots.build_figure(spec("convergence", inputs=[str(p)]))


def test_sweep_marks_the_zero_crossing(tmp_path):
    p = tmp_path / "sweep.csv"
    rows = ["beta,threshold"] + [f"{b},{2 * b - 2}" for b in np.linspace(0.5, 2.0, 7)]
    p.write_text("\n".join(rows) + "\n")
    fig = plots.build_figure(spec("sweep", inputs=[str(p)]))
    ax = fig.axes[0]
    verticals = [l for l in ax.get_lines()
                 if len(set(l.get_xdata())) == 1 and len(l.get_ydata()) == 2]
    assert any(abs(l.get_xdata()[0] - 1.0) < 1e-9 for l in verticals)


def test_coupling_gap_reads_couple_summary(tmp_path):
    summary = {"result": {"runs": [
        {"model_id": "rma", "avg_gap": 0.4, "gap_se": 0.02},
        {"model_id": "rma", "avg_gap": 0.5, "gap_se": 0.03},
    ]}}
    p = tmp_path / "summary.json"
    p.write_text(json.dumps(summary))
    fig = plots.build_figure(spec("coupling-gap", summary=str(p)))
    assert fig.axes[0].get_ylabel().startswith("time-average gap")


def test_cli_exit_codes(tmp_path):
    script = Path(plots.__file__)
    out = tmp_path / "fig.png"
    ok = subprocess.run([sys.executable, str(script), "--kind", "convergence",
                         "--in", *CSVS, "--summary", str(SAMPLE / "summary.json"),
                         "--out", str(out)])
    assert ok.returncode == 0 and out.exists()
    bad = subprocess.run([sys.executable, str(script), "--kind", "sweep",
                          "--in", str(tmp_path / "nope.csv"),
                          "--out", str(tmp_path / "x.png")],
                         capture_output=True, text=True)
    assert bad.returncode == 1
    assert "error [" in bad.stdout
