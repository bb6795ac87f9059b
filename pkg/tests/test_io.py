from __future__ import annotations

import numpy as np
import pytest

from breakscan import TimeSeriesPanel, simulate_dgp
from breakscan.io import CSVFormatError, parse_mapping, read_fred_csv, read_panel_csv, write_panel_csv
from breakscan.simulate import scenario_preset


@pytest.mark.parametrize("variant", ["full", "SUR"])
def test_round_trip_bit_exact(tmp_path, variant):
    panel, _, _ = simulate_dgp(scenario_preset("SB2", 300, variant=variant, seed=4))
    path = tmp_path / "p.csv"
    write_panel_csv(panel, path)
    back, dates = read_panel_csv(path, panel.include_trend, panel.include_intercept)
    assert dates is None
    for name in ("Y", "X", "W"):
        a, b = getattr(panel, name), getattr(back, name)
        assert a.shape == b.shape and np.array_equal(a, b)


def test_round_trip_extreme_values(tmp_path):
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((1, 20)) * 10.0 ** rng.integers(-300, 300, size=(1, 20))
    p = TimeSeriesPanel(Y, np.zeros((0, 20)), np.zeros((0, 20)), False, True)
    write_panel_csv(p, tmp_path / "e.csv", dates=[f"2000-{m:02d}" for m in range(1, 21)])
    back, dates = read_panel_csv(tmp_path / "e.csv", False, True)
    assert np.array_equal(back.Y, Y) and dates[0] == "2000-01"


def _write(path, text):
    path.write_text(text)
    return path


def test_parse_errors_carry_line_numbers(tmp_path):
    with pytest.raises(CSVFormatError, match="empty"):
        read_panel_csv(_write(tmp_path / "a.csv", ""))
    with pytest.raises(CSVFormatError, match="no data rows"):
        read_panel_csv(_write(tmp_path / "b.csv", "t,y1\n"))
    with pytest.raises(CSVFormatError, match="line 3, column 'y1'"):
        read_panel_csv(_write(tmp_path / "c.csv", "t,y1\n1,2.0\n2,abc\n"))
    with pytest.raises(CSVFormatError, match="line 2: expected 2 fields"):
        read_panel_csv(_write(tmp_path / "d.csv", "t,y1\n1,2.0,3\n"))
    with pytest.raises(CSVFormatError, match="no response"):
        read_panel_csv(_write(tmp_path / "e.csv", "t,x1\n1,2.0\n"))
    with pytest.raises(CSVFormatError, match="consecutively"):
        read_panel_csv(_write(tmp_path / "f.csv", "t,y1,y3\n1,2.0,3\n"))
    with pytest.raises(CSVFormatError, match="non-finite"):
        read_panel_csv(_write(tmp_path / "g.csv", "t,y1\n1,nan\n"))


def test_parse_mapping():
    assert parse_mapping("DGS10=y1, DGS1=X1") == {"DGS10": "y1", "DGS1": "x1"}
    for bad in ("", "DGS10", "DGS10=z1"):
        with pytest.raises(CSVFormatError):
            parse_mapping(bad)


def test_fred_join(tmp_path):
    a = _write(tmp_path / "a.csv", "DATE,DGS10\n2000-01-01,6.0\n2000-02-01,.\n2000-03-01,6.2\n2000-04-01,6.3\n")
    b = _write(
        tmp_path / "b.csv",
        "observation_date,DGS5,DGS1\n2000-01-01,5.0,4.0\n2000-02-01,5.1,4.1\n2000-03-01,5.2,4.2\n",
    )
    panel, dates = read_fred_csv([a, b], {"DGS10": "y1", "DGS5": "y2", "DGS1": "x1"})
    assert dates == ["2000-01-01", "2000-03-01"]
    np.testing.assert_array_equal(panel.Y, [[6.0, 6.2], [5.0, 5.2]])
    np.testing.assert_array_equal(panel.X, [[4.0, 4.2]])
    assert not panel.include_trend and panel.include_intercept
    with pytest.raises(CSVFormatError, match="not found"):
        read_fred_csv([a], {"DGS30": "y1"})
    with pytest.raises(CSVFormatError, match="no DATE"):
        read_fred_csv([_write(tmp_path / "c.csv", "when,DGS10\n1,2\n")], {"DGS10": "y1"})


def test_fred_bad_value_names_line(tmp_path):
    a = _write(tmp_path / "a.csv", "DATE,DGS10\n2000-01-01,6.0\n2000-02-01,x\n")
    with pytest.raises(CSVFormatError, match="a.csv, line 3"):
        read_fred_csv([a], {"DGS10": "y1"})
