from __future__ import annotations

from pathlib import Path

import pytest

from gerrygrid.analysis import SlopeRow, sweep
from gerrygrid.comparison import CurvePoint
from gerrygrid.enumeration import PlanSet
from gerrygrid.errors import ParseError, ValidationError
from gerrygrid.grid_graph import DualGraph, eight_block_graph
from gerrygrid.storage import (
    SWEEP_FIXED_COLUMNS,
    SweepCsvWriter,
    histogram_columns,
    last_sweep_bits,
    metadata_line,
    parse_metadata_line,
    read_edge_list,
    read_plans,
    read_result_json,
    read_slopes,
    read_sweep_csv,
    read_sweep_meta,
    write_curves,
    write_edge_list,
    write_plans,
    write_result_json,
    write_slopes,
)

SWEEP_META = {"k": 16, "n": 4, "mode": "full"}


def test_metadata_line_round_trip() -> None:
    line = metadata_line({"seed": 3, "command": "sweep"})
    assert line.startswith("# gerrygrid ")
    assert parse_metadata_line(line) == {"command": "sweep", "seed": 3}
    assert parse_metadata_line("# a plain comment") == {}


def test_plan_file_is_reproducible(tmp_path: Path, plans3: PlanSet) -> None:
    first = write_plans(tmp_path / "a.txt", plans3, {"n": 3})
    second = write_plans(tmp_path / "b.txt", read_plans(first), {"n": 3})
    assert first.read_bytes() == second.read_bytes()
    assert read_plans(first, expected_n=3) == plans3


def test_plan_file_errors(tmp_path: Path, plans3: PlanSet) -> None:
    path = write_plans(tmp_path / "plans.txt", plans3, {})
    with pytest.raises(ValidationError):
        read_plans(path, expected_n=4)

    bad = tmp_path / "bad.txt"
    bad.write_text("gerrygrid-plans v1 n=3\n000111222\n00011122\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_plans(bad)
    assert excinfo.value.line_number == 3

    unsorted = tmp_path / "unsorted.txt"
    unsorted.write_text("gerrygrid-plans v1 n=3\n012012012\n000111222\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_plans(unsorted)
    assert excinfo.value.line_number == 3

    headless = tmp_path / "headless.txt"
    headless.write_text("000111222\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_plans(headless)
    assert excinfo.value.line_number == 1


@pytest.mark.parametrize(
    "plan_line",
    [
        "010101222",  # districts split in two pieces
        "000000000",  # one district instead of three
        "000011122",  # unequal district sizes
    ],
)
def test_plan_file_rejects_illegal_plans(tmp_path: Path, plan_line: str) -> None:
    path = tmp_path / "plans.txt"
    path.write_text(f"# hand written\ngerrygrid-plans v1 n=3\n{plan_line}\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="line 3") as excinfo:
        read_plans(path)
    assert not isinstance(excinfo.value, ParseError)


def test_edge_list_round_trip(tmp_path: Path) -> None:
    g = eight_block_graph()
    loaded = read_edge_list(write_edge_list(tmp_path / "g.txt", g))
    assert loaded.k == g.k
    assert sorted(loaded.edges) == sorted(g.edges)
    assert loaded.border == g.border


def test_edge_list_errors(tmp_path: Path) -> None:
    path = tmp_path / "g.txt"
    path.write_text("3\n0 1\n1 x\n0 2\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_edge_list(path)
    assert excinfo.value.line_number == 3


def test_histogram_columns() -> None:
    assert histogram_columns(2) == ["hist_0", "hist_0_5", "hist_1", "hist_1_5", "hist_2"]
    assert len(histogram_columns(5)) == 11


def test_sweep_csv_round_trip(tmp_path: Path, grid4: DualGraph, plans4: PlanSet) -> None:
    records = list(sweep(grid4, plans4, num_filter=2))
    path = tmp_path / "sweep.csv"
    with SweepCsvWriter(path, 4, SWEEP_META) as writer:
        assert writer.write_all(records) == 120

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1].split(",") == [*SWEEP_FIXED_COLUMNS, *histogram_columns(4)]
    assert len(lines) == 122
    assert read_sweep_meta(path)["mode"] == "full"
    assert list(read_sweep_csv(path)) == records
    assert last_sweep_bits(path) == records[-1].bits


def test_sweep_csv_append(tmp_path: Path, grid4: DualGraph, plans4: PlanSet) -> None:
    records = list(sweep(grid4, plans4, num_filter=2))
    path = tmp_path / "sweep.csv"
    with SweepCsvWriter(path, 4, SWEEP_META) as writer:
        writer.write_all(records[:50])
    with SweepCsvWriter(path, 4, SWEEP_META, append=True) as writer:
        writer.write_all(records[50:])
    assert list(read_sweep_csv(path)) == records


def test_dedup_csv_recovers_orbit_sizes(tmp_path: Path, grid4: DualGraph, plans4: PlanSet) -> None:
    records = list(sweep(grid4, plans4, mode="dedup", num_filter=3))
    path = tmp_path / "dedup.csv"
    with SweepCsvWriter(path, 4, {**SWEEP_META, "mode": "dedup"}) as writer:
        writer.write_all(records)
    assert [r.orbit_size for r in read_sweep_csv(path)] == [r.orbit_size for r in records]


def test_sweep_csv_errors(tmp_path: Path, grid4: DualGraph, plans4: PlanSet) -> None:
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        list(read_sweep_csv(empty))

    path = tmp_path / "sweep.csv"
    with SweepCsvWriter(path, 4, SWEEP_META) as writer:
        writer.write_all(list(sweep(grid4, plans4, num_filter=2))[:3])
    lines = path.read_text(encoding="utf-8").splitlines()
    fields = lines[3].split(",")
    fields[1] = "5"
    lines[3] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        list(read_sweep_csv(path))
    assert excinfo.value.line_number == 4

    lines[3] = "ff,8,0.5"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        list(read_sweep_csv(path))


def test_slopes_round_trip(tmp_path: Path) -> None:
    rows = [SlopeRow(3, 0.2993106942, 1.25, 2300), SlopeRow(4, -0.5, 2.0, 12650)]
    assert read_slopes(write_slopes(tmp_path / "slopes.csv", rows, {})) == rows


def test_curves_file_has_known_max_row(tmp_path: Path) -> None:
    points = [CurvePoint("sa", 10, 2.5, 0.1), CurvePoint("random", 10, 2.25, 0.0)]
    path = write_curves(tmp_path / "curves.csv", points, {"seed": 1}, known_max=3.0)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1] == "algorithm,k_max,mean_best,stderr"
    assert lines[2] == "sa,10,2.5,0.1"
    assert lines[-1] == "known_max,,3,"


def test_result_json(tmp_path: Path) -> None:
    path = write_result_json(tmp_path / "r.json", {"best_score": 2.5}, {"seed": 9})
    document = read_result_json(path)
    assert document["best_score"] == 2.5
    assert document["meta"]["seed"] == 9
    assert document["meta"]["tool"] == "gerrygrid"

    broken = tmp_path / "broken.json"
    broken.write_text("{\n  oops\n}", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_result_json(broken)
    assert excinfo.value.line_number == 2
