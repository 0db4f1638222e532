#!/usr/bin/env python3
"""
📄 REPORT SERVICE v1.0
📊 Отчеты исследований: CSV (ячейки) и JSON (ячейки + метаданные)

JSON: ключи отсортированы, числа с 17 значащими цифрами.
CSV читается обратно в те же CellResult.
"""

import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import aiofiles
import pandas as pd

from app.exceptions import CsvParseError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class CellResult:
    """📊 Итог ячейки (закон, метод)"""
    distribution: str
    method: str
    replications: int
    valid: int
    available: bool = True
    value: Optional[float] = None
    std_error: Optional[float] = None
    mean_length: Optional[float] = None
    length_std_error: Optional[float] = None
    true_value: Optional[float] = None
    failures: int = 0


@dataclass(frozen=True)
class StudyReport:
    """📊 Отчет исследования; timings не участвуют в сравнении"""
    run_id: str
    name: str
    kind: str
    n: int
    seed: int
    replications: int
    cells: List[CellResult] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def cell(self, distribution: str, method: str) -> CellResult:
        for cell in self.cells:
            if cell.distribution == distribution and cell.method == method:
                return cell
        raise KeyError((distribution, method))

    def to_frame(self) -> pd.DataFrame:
        return cells_to_frame(self.cells)


_CELL_FIELDS = [f.name for f in fields(CellResult)]
_OPTIONAL_FLOATS = ("value", "std_error", "mean_length", "length_std_error", "true_value")


def cells_to_frame(cells: List[CellResult]) -> pd.DataFrame:
    return pd.DataFrame([asdict(c) for c in cells], columns=_CELL_FIELDS)


def _clean(value: Any) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


def frame_to_cells(frame: pd.DataFrame) -> List[CellResult]:
    missing = [c for c in _CELL_FIELDS if c not in frame.columns]
    if missing:
        raise CsvParseError(f"❌ В отчете нет колонок: {', '.join(missing)}")
    cells = []
    for record in frame.to_dict(orient="records"):
        cells.append(CellResult(
            distribution=str(record["distribution"]),
            method=str(record["method"]),
            replications=int(record["replications"]),
            valid=int(record["valid"]),
            available=str(record["available"]).lower() == "true",
            failures=int(record["failures"]),
            **{name: _clean(record[name]) for name in _OPTIONAL_FLOATS},
        ))
    return cells


def report_to_csv(report: StudyReport) -> str:
    buffer = io.StringIO()
    report.to_frame().to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT)
    return buffer.getvalue()


def report_to_json(report: StudyReport) -> str:
    payload = asdict(report)
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


def report_from_json(text: str) -> StudyReport:
    payload = json.loads(text)
    cells = [CellResult(**cell) for cell in payload.pop("cells")]
    return StudyReport(cells=cells, **payload)


def cells_from_csv(text: str) -> List[CellResult]:
    frame = pd.read_csv(io.StringIO(text), dtype={"distribution": str, "method": str},
                        keep_default_na=False, na_values=[""])
    return frame_to_cells(frame)


def format_table(report: StudyReport) -> str:
    """🖨️ Таблица закон × метод с тремя знаками"""
    frame = report.to_frame()
    if frame.empty:
        return ""
    table = frame.pivot(index="distribution", columns="method", values="value")
    order = list(dict.fromkeys(frame["distribution"]))
    methods = list(dict.fromkeys(frame["method"]))
    table = table.loc[order, methods]
    return table.to_string(float_format=lambda v: f"{v:.3f}", na_rep="-")


async def write_report(report: StudyReport, out_dir: Path) -> Dict[str, Path]:
    """💾 Запись report.csv и report.json в каталог"""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / f"{report.name}.csv", "json": out_dir / f"{report.name}.json"}
    async with aiofiles.open(paths["csv"], "w", encoding="utf-8", newline="") as f:
        await f.write(report_to_csv(report))
    async with aiofiles.open(paths["json"], "w", encoding="utf-8") as f:
        await f.write(report_to_json(report))
    logger.info(f"📄 Отчет записан: {paths['csv']}, {paths['json']}")
    return paths


async def read_report(path: Path) -> StudyReport:
    async with aiofiles.open(path, "r", encoding="utf-8") as f:
        return report_from_json(await f.read())
