from __future__ import annotations

import csv
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, TextIO

from . import __version__
from .analysis import SlopeRow, SweepRecord
from .comparison import CurvePoint
from .districting import DistrictingPlan, is_legal
from .enumeration import PlanSet, VoterDistribution, orbit_size
from .errors import ParseError, ValidationError
from .grid_graph import DualGraph, grid_graph
from .metrics import RepStats

LOGGER = logging.getLogger(__name__)

PLAN_HEADER = "gerrygrid-plans v1 n={n}"
SWEEP_FIXED_COLUMNS = ("bits_hex", "num", "clus", "clusp", "e_rep", "var_rep", "min_rep", "max_rep")
SLOPE_COLUMNS = ("num", "slope", "intercept", "count")
POINT_COLUMNS = ("num", "clusp", "e_rep")
CURVE_COLUMNS = ("algorithm", "k_max", "mean_best", "stderr")
# Clus/ClusP denominators are edge counts; 12 significant digits pin a unique
# fraction below this bound.
_MAX_METRIC_DENOMINATOR = 10_000


def metadata_line(meta: Mapping[str, Any]) -> str:
    return f"# gerrygrid {__version__} {json.dumps(dict(meta), sort_keys=True, default=str)}"


def parse_metadata_line(line: str) -> dict[str, Any]:
    """Flags recorded in a `# gerrygrid <version> {...}` line; empty for other comments."""
    parts = line.lstrip("#").strip().split(" ", 2)
    if len(parts) < 3 or parts[0] != "gerrygrid":
        return {}
    try:
        meta = json.loads(parts[2])
    except json.JSONDecodeError:
        return {}
    return meta if isinstance(meta, dict) else {}


def _decimal(value: Fraction | float) -> str:
    return format(float(value), ".12g")


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def write_plans(path: str | Path, plans: PlanSet, meta: Mapping[str, Any]) -> Path:
    if plans.n is None:
        raise ValidationError("only grid plan sets have a plan-file form")
    target = Path(path)
    _ensure_parent(target)
    lines = sorted(plan.to_string() for plan in plans)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(metadata_line(meta) + "\n")
        handle.write(PLAN_HEADER.format(n=plans.n) + "\n")
        for line in lines:
            handle.write(line + "\n")
    LOGGER.info("Wrote %s plans to %s", len(lines), target)
    return target


def read_plans(path: str | Path, expected_n: int | None = None) -> PlanSet:
    source = Path(path)
    n: int | None = None
    g: DualGraph | None = None
    plans: list[DistrictingPlan] = []
    previous = ""
    with source.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                continue
            if n is None:
                prefix = PLAN_HEADER.format(n="")
                if not line.startswith(prefix) or not line[len(prefix):].isdigit():
                    raise ParseError(f"expected header {prefix}<n>, got {line!r}", line_number)
                n = int(line[len(prefix):])
                if n < 1:
                    raise ParseError(f"grid side must be positive, got {n}", line_number)
                g = grid_graph(n, n)
                continue
            if len(line) != n * n or not line.isdigit():
                raise ParseError(f"plan line must be {n * n} digits", line_number)
            if line <= previous:
                raise ParseError("plan lines must be sorted and unique", line_number)
            plan = DistrictingPlan.from_string(line)
            if plan.to_string() != line:
                raise ParseError("plan labels are not in first-appearance order", line_number)
            if plan.n_districts != n or not is_legal(g, plan):
                raise ValidationError(f"line {line_number}: {line} is not a legal {n}-district plan of the {n}x{n} grid")
            previous = line
            plans.append(plan)
    if n is None:
        raise ParseError("plan file has no header")
    if expected_n is not None and n != expected_n:
        raise ValidationError(f"plan file {source} is for n={n}, expected n={expected_n}")
    return PlanSet(n=n, plans=tuple(plans))


def write_edge_list(path: str | Path, g: DualGraph) -> Path:
    target = Path(path)
    _ensure_parent(target)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{g.k}\n")
        for a, b in g.edges:
            handle.write(f"{a} {b}\n")
        handle.write(" ".join(str(b) for b in range(g.k) if g.border[b]) + "\n")
    return target


def read_edge_list(path: str | Path) -> DualGraph:
    """`k`, then one `a b` pair per line, then the border block ids on the last line."""
    with Path(path).open("r", encoding="utf-8") as handle:
        lines = [(number, raw.strip()) for number, raw in enumerate(handle, start=1)]
    lines = [(number, text) for number, text in lines if text and not text.startswith("#")]
    if len(lines) < 2:
        raise ParseError("edge list needs a block count and a border line")
    first_number, first = lines[0]
    if not first.isdigit():
        raise ParseError(f"expected block count, got {first!r}", first_number)
    k = int(first)
    edges: list[tuple[int, int]] = []
    for number, text in lines[1:-1]:
        fields = text.split()
        if len(fields) != 2 or not all(f.isdigit() for f in fields):
            raise ParseError(f"expected 'a b', got {text!r}", number)
        edges.append((int(fields[0]), int(fields[1])))
    border_number, border_text = lines[-1]
    fields = border_text.split()
    if not all(f.isdigit() for f in fields):
        raise ParseError(f"expected border block ids, got {border_text!r}", border_number)
    return DualGraph.from_edges(k, edges, [int(f) for f in fields])


def histogram_columns(n_districts: int) -> list[str]:
    columns = []
    for half in range(2 * n_districts + 1):
        whole, rest = divmod(half, 2)
        columns.append(f"hist_{whole}_5" if rest else f"hist_{whole}")
    return columns


class SweepCsvWriter:
    """Streams sweep records to CSV in the fixed column order."""

    def __init__(self, path: str | Path, n_districts: int, meta: Mapping[str, Any], append: bool = False) -> None:
        self.path = Path(path)
        _ensure_parent(self.path)
        self._n_districts = n_districts
        fresh = not append or not self.path.exists() or self.path.stat().st_size == 0
        self._handle: TextIO = self.path.open("a" if append else "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self.rows = 0
        if fresh:
            self._handle.write(metadata_line(meta) + "\n")
            self._writer.writerow([*SWEEP_FIXED_COLUMNS, *histogram_columns(n_districts)])

    def write(self, record: SweepRecord) -> None:
        rep = record.rep
        self._writer.writerow(
            [
                format(record.bits, f"0{(record.k + 3) // 4}x"),
                record.num,
                _decimal(record.clus),
                "" if record.clusp is None else _decimal(record.clusp),
                _decimal(rep.expectation),
                _decimal(rep.variance),
                _decimal(rep.min),
                _decimal(rep.max),
                *rep.half_histogram(self._n_districts),
            ]
        )
        self.rows += 1

    def write_all(self, records: Iterable[SweepRecord]) -> int:
        for record in records:
            self.write(record)
        return self.rows

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "SweepCsvWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def read_sweep_meta(path: str | Path) -> dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as handle:
        for raw in handle:
            if not raw.startswith("#"):
                break
            meta = parse_metadata_line(raw)
            if meta:
                return meta
    return {}


def read_sweep_csv(path: str | Path) -> Iterator[SweepRecord]:
    """Records of a sweep CSV; seat statistics are rebuilt exactly from the histogram columns."""
    source = Path(path)
    meta: dict[str, Any] = {}
    header: list[str] | None = None
    n_districts = 0
    k = 0
    dedup = False
    with source.open("r", encoding="utf-8", newline="") as handle:
        for line_number, raw in enumerate(handle, start=1):
            if raw.startswith("#"):
                meta = meta or parse_metadata_line(raw)
                continue
            if not raw.strip():
                continue
            fields = next(csv.reader([raw]))
            if header is None:
                header = fields
                n_districts, k = _check_sweep_header(header, meta, line_number)
                dedup = meta.get("mode") == "dedup"
                continue
            yield _parse_sweep_row(fields, header, n_districts, k, dedup, line_number)
    if header is None:
        raise ParseError(f"sweep CSV {source} has no header row")


def _check_sweep_header(header: Sequence[str], meta: Mapping[str, Any], line_number: int) -> tuple[int, int]:
    fixed = len(SWEEP_FIXED_COLUMNS)
    hist_count = len(header) - fixed
    if tuple(header[:fixed]) != SWEEP_FIXED_COLUMNS or hist_count < 1 or hist_count % 2 == 0:
        raise ParseError("unexpected sweep CSV header", line_number)
    n_districts = (hist_count - 1) // 2
    if list(header[fixed:]) != histogram_columns(n_districts):
        raise ParseError("unexpected histogram columns", line_number)
    k = int(meta.get("k", n_districts * n_districts))
    return n_districts, k


def _parse_sweep_row(
    fields: Sequence[str],
    header: Sequence[str],
    n_districts: int,
    k: int,
    dedup: bool,
    line_number: int,
) -> SweepRecord:
    if len(fields) != len(header):
        raise ParseError(f"expected {len(header)} fields, got {len(fields)}", line_number)
    try:
        bits = int(fields[0], 16)
        num = int(fields[1])
        clus = Fraction(fields[2]).limit_denominator(_MAX_METRIC_DENOMINATOR)
        clusp = Fraction(fields[3]).limit_denominator(_MAX_METRIC_DENOMINATOR) if fields[3] else None
        counts = [int(value) for value in fields[len(SWEEP_FIXED_COLUMNS):]]
    except ValueError as exc:
        raise ParseError(f"malformed field: {exc}", line_number) from exc
    if bits.bit_count() != num or bits >> k:
        raise ParseError(f"bits {fields[0]} do not match num={num} on {k} blocks", line_number)
    if sum(counts) == 0:
        raise ParseError("histogram is empty", line_number)
    rep = RepStats.from_half_histogram(counts)
    if abs(float(rep.expectation) - float(fields[4])) > 1e-9:
        raise ParseError("e_rep disagrees with the histogram columns", line_number)
    size = orbit_size(VoterDistribution(bits, k), n_districts) if dedup else 1
    return SweepRecord(bits=bits, k=k, num=num, clus=clus, clusp=clusp, rep=rep, orbit_size=size)


def last_sweep_bits(path: str | Path) -> int | None:
    """Largest bit vector already written to a sweep CSV, for resuming."""
    last: int | None = None
    for record in read_sweep_csv(path):
        last = record.bits
    return last


def write_slopes(path: str | Path, rows: Iterable[SlopeRow], meta: Mapping[str, Any]) -> Path:
    target = Path(path)
    _ensure_parent(target)
    with target.open("w", encoding="utf-8", newline="") as handle:
        handle.write(metadata_line(meta) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SLOPE_COLUMNS)
        for row in rows:
            writer.writerow([row.num, format(row.slope, ".10g"), format(row.intercept, ".10g"), row.count])
    return target


def read_slopes(path: str | Path) -> list[SlopeRow]:
    rows: list[SlopeRow] = []
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        lines = [(n, raw) for n, raw in enumerate(handle, start=1) if not raw.startswith("#") and raw.strip()]
    if not lines or next(csv.reader([lines[0][1]])) != list(SLOPE_COLUMNS):
        raise ParseError("slope CSV has no valid header")
    for line_number, raw in lines[1:]:
        fields = next(csv.reader([raw]))
        try:
            rows.append(SlopeRow(int(fields[0]), float(fields[1]), float(fields[2]), int(fields[3])))
        except (ValueError, IndexError) as exc:
            raise ParseError(f"malformed slope row: {exc}", line_number) from exc
    return rows


def write_points(path: str | Path, points: Iterable[tuple[int, float, float]], meta: Mapping[str, Any]) -> Path:
    target = Path(path)
    _ensure_parent(target)
    with target.open("w", encoding="utf-8", newline="") as handle:
        handle.write(metadata_line(meta) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(POINT_COLUMNS)
        for num, clusp, expectation in points:
            writer.writerow([num, _decimal(clusp), _decimal(expectation)])
    return target


def write_curves(
    path: str | Path,
    points: Iterable[CurvePoint],
    meta: Mapping[str, Any],
    known_max: float | None = None,
) -> Path:
    target = Path(path)
    _ensure_parent(target)
    with target.open("w", encoding="utf-8", newline="") as handle:
        handle.write(metadata_line(meta) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for point in points:
            writer.writerow([point.algorithm, point.k_max, _decimal(point.mean_best), _decimal(point.stderr)])
        if known_max is not None:
            writer.writerow(["known_max", "", _decimal(known_max), ""])
    return target


def write_result_json(path: str | Path, payload: Mapping[str, Any], meta: Mapping[str, Any]) -> Path:
    target = Path(path)
    _ensure_parent(target)
    document = {"meta": {"tool": "gerrygrid", "version": __version__, **meta}, **payload}
    target.write_text(json.dumps(document, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return target


def read_result_json(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
