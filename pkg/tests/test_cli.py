from __future__ import annotations

from pathlib import Path

import pytest

from gerrygrid.main import build_parser, main


def test_enumerate_prints_plan_count(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    assert main(["enumerate", "-n", "2"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    written = (tmp_path / "output" / "plans2.txt").read_text(encoding="utf-8").splitlines()
    assert written[0].startswith("# gerrygrid ")
    assert written[1:] == ["gerrygrid-plans v1 n=2", "0011", "0101"]


def test_enumerate_rejects_large_grids(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["enumerate", "-n", "9"]) == 1
    assert capsys.readouterr().err.startswith("error: ")


def test_sweep_then_analyze(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    target = tmp_path / "sweep.csv"
    assert main(["sweep", "-n", "4", "--num", "2", "-o", str(target)]) == 0
    assert capsys.readouterr().out.strip() == "120"
    first = target.read_bytes()
    assert len(first.decode("utf-8").splitlines()) == 122

    assert main(["sweep", "-n", "4", "--num", "2", "-o", str(target), "--threads", "3"]) == 0
    assert target.read_bytes() == first
    capsys.readouterr()

    slopes = tmp_path / "slopes.csv"
    assert main(["analyze", str(target), "-o", str(slopes)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("num,slope,intercept,count\n2,")
    assert "best num=2" in out
    assert "worst num=2" in out
    assert slopes.exists()


def test_sweep_resume_appends(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    whole = tmp_path / "whole.csv"
    part = tmp_path / "part.csv"
    assert main(["sweep", "-n", "3", "--num", "2", "-o", str(whole)]) == 0
    rows = whole.read_text(encoding="utf-8").splitlines()
    cut = rows[2 + 10].split(",")[0]
    part.write_text("\n".join(rows[: 2 + 11]) + "\n", encoding="utf-8")
    assert main(["sweep", "-n", "3", "--num", "2", "-o", str(part), "--resume-from", cut]) == 0
    assert part.read_text(encoding="utf-8").splitlines()[2:] == rows[2:]
    assert capsys.readouterr().out.split() == ["36", "25"]


def test_analyze_rejects_empty_csv(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    assert main(["analyze", str(empty)]) == 1
    assert "error:" in capsys.readouterr().err


def test_optimize_random_full_grid(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    out = tmp_path / "result.json"
    assert main(["optimize", "--alg", "random", "--num", "16", "--k-max", "1", "-n", "4", "-o", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "4.000000 ffff"
    assert lines[1:] == ["****"] * 4
    assert '"evaluations": 1' in out.read_text(encoding="utf-8")


def test_optimize_usage_errors(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["optimize", "--alg", "greedy", "--num", "4", "-n", "3"]) == 1
    assert "unknown algorithm" in capsys.readouterr().err
    assert main(["optimize", "--alg", "sa", "--num", "4", "--bogus"]) == 1
    assert main(["optimize", "--alg", "sa", "--num", "4", "-n", "3", "--alpha", "0"]) == 1
    assert main([]) == 1


def test_compare_prints_curves(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    argv = [
        "compare",
        "-n", "3",
        "--algs", "random,sa",
        "--num", "4",
        "--trials", "3",
        "--k-max-grid", "1,5",
        "--known-max", "3.0",
        "-o", str(tmp_path / "curves.csv"),
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "algorithm,k_max,mean_best,stderr"
    assert sum(line.startswith(("random,", "sa,")) for line in out) == 4
    assert "known_max,,3.000000," in out
    assert any(line.startswith("soft-check") for line in out)
    assert (tmp_path / "curves.csv").exists()


def test_rep_hex(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["rep", "-n", "2", "--hex", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:2] == ["**", ".."]
    assert out[2] == "num=2 clus=0.500000 clusp=0.500000"
    assert out[3].startswith("E=1.000000 Var=0.000000")


def test_rep_needs_a_distribution(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["rep", "-n", "2"]) == 1
    assert "--hex or --grid" in capsys.readouterr().err


def test_orbits(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["orbits", "-n", "3", "--brute-force"]) == 0
    assert capsys.readouterr().out.splitlines() == ["burnside 102", "brute-force 102"]


def test_version() -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0


@pytest.mark.parametrize(
    ("argv", "threads", "log_level"),
    [
        (["--threads", "2", "sweep"], 2, None),
        (["sweep", "--threads", "3", "--log-level", "DEBUG"], 3, "DEBUG"),
        (["--threads", "2", "--log-level", "INFO", "orbits", "--threads", "5"], 5, "INFO"),
        (["orbits"], None, None),
    ],
)
def test_global_flags_on_either_side_of_subcommand(argv: list[str], threads: int | None, log_level: str | None) -> None:
    ns = build_parser().parse_args(argv)
    assert ns.threads == threads
    assert ns.log_level == log_level
    assert ns.output_dir is None


def test_output_dir_after_subcommand(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    assert main(["enumerate", "-n", "2", "--output-dir", str(tmp_path / "elsewhere")]) == 0
    assert (tmp_path / "elsewhere" / "plans2.txt").exists()
    capsys.readouterr()
