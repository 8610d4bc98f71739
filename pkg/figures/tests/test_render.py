from pathlib import Path

import pytest

from ttfigures.cli import main
from ttfigures.render import FigureSpec, RenderError, load_table, render

DATA = Path(__file__).parent / "data"


def test_load_table_parses_metadata_and_rows():
    meta, columns, rows = load_table(DATA / "quantifiers.csv")
    assert meta["tag"] == "quantifiers"
    assert "fingerprint" in meta
    assert columns[:3] == ["delta", "lambda", "k"]
    assert all(isinstance(r[0], float) for r in rows)


def test_dynamics_panel_per_lambda(tmp_path):
    spec = FigureSpec("dynamics", [DATA / "dynamics.csv"], tmp_path / "dyn.png")
    fig = render(spec)
    assert len(fig.axes) == 4  # one panel per measurement strength
    assert (tmp_path / "dyn.png").is_file()


def test_quantifiers_panel_per_delta(tmp_path):
    spec = FigureSpec("quantifiers", [DATA / "quantifiers.csv"], tmp_path / "q.png")
    fig = render(spec)
    assert len(fig.axes) == 3  # one panel per time spacing
    assert (tmp_path / "q.png").is_file()


def test_violation_single_axes(tmp_path):
    spec = FigureSpec("violation", [DATA / "violation.csv"], tmp_path / "v.png")
    fig = render(spec)
    assert len(fig.axes) == 1
    assert (tmp_path / "v.png").is_file()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(RenderError):
        FigureSpec("histogram", [DATA / "violation.csv"], tmp_path / "x.png")


def test_schema_mismatch_writes_nothing(tmp_path):
    out = tmp_path / "bad.png"
    spec = FigureSpec("dynamics", [DATA / "quantifiers.csv"], out)
    with pytest.raises(RenderError, match="missing columns"):
        render(spec)
    assert not out.exists()


def test_empty_table_writes_nothing(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("# tag = dynamics\ndelta,lambda,t,rho11,abs_rho12,post_measurement,ceiling_flag\n")
    out = tmp_path / "empty.png"
    with pytest.raises(RenderError, match="no data rows"):
        render(FigureSpec("dynamics", [empty], out))
    assert not out.exists()


def test_missing_input_reported(tmp_path):
    with pytest.raises(RenderError, match="not found"):
        render(FigureSpec("dynamics", [tmp_path / "nope.csv"], tmp_path / "o.png"))


def test_rendering_is_deterministic(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(FigureSpec("violation", [DATA / "violation.csv"], a))
    render(FigureSpec("violation", [DATA / "violation.csv"], b))
    assert a.read_bytes() == b.read_bytes()


def test_cli_render_roundtrip(tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = main(
        ["render", "--kind", "quantifiers", "--in", str(DATA / "quantifiers.csv"),
         "--out", str(out)]
    )
    assert code == 0
    assert out.is_file()
    assert "3 panels" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    assert main(["render", "--kind", "dynamics", "--in", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "o.png")]) == 1
    assert main(["render", "--kind", "pie", "--in", "x", "--out", "y"]) == 1
    assert main(["draw"]) == 1
