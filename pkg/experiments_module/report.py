import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.errors import LabError
from core.logging import get_logger

logger = get_logger()

VERSION = "1.0.0"


@dataclass
class CheckLine:
    name: str
    passed: bool
    witness: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "witness": self.witness}

    def line(self) -> str:
        if self.passed:
            return f"PASS {self.name}"
        return f"FAIL {self.name}: {self.witness}"


@dataclass
class Table:
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise LabError("config", f"row of {len(values)} values for {len(self.columns)} columns")
        self.rows.append([_plain(v) for v in values])

    def to_dict(self) -> Dict[str, Any]:
        return {"columns": list(self.columns), "rows": self.rows}


@dataclass
class Report:
    """
    Итог команды: эхо конфигурации, проверки, таблицы и полезная нагрузка.

    Время работы в файлы не пишется (файлы побайтно воспроизводимы),
    оно выводится только в текстовую сводку.
    """
    command: str
    config: Dict[str, Any]
    checks: List[CheckLine] = field(default_factory=list)
    tables: Dict[str, Table] = field(default_factory=dict)
    payload: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = VERSION

    def check(self, name: str, passed: bool, witness: Optional[str] = None) -> bool:
        """Добавляет проверку; у проваленной всегда есть свидетель"""
        passed = bool(passed)
        if not passed and not witness:
            witness = "no witness recorded"
        self.checks.append(CheckLine(name, passed, None if passed else witness))
        return passed

    def table(self, name: str, columns: Sequence[str]) -> Table:
        self.tables[name] = Table(list(columns))
        return self.tables[name]

    @property
    def failed(self) -> List[CheckLine]:
        return [c for c in self.checks if not c.passed]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "tables": {name: t.to_dict() for name, t in self.tables.items()},
            "payload": _plain(self.payload)
        }


def _plain(value: Any) -> Any:
    """numpy и complex в значения, которые JSON пишет однозначно"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def format_value(value: Any) -> str:
    """Числа с плавающей точкой печатаются с 17 значащими цифрами"""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if isinstance(value, list):
        return ";".join(format_value(v) for v in value)
    if value is None:
        return ""
    return str(value)


def render_text(report: Report) -> str:
    lines = [f"foliation-lab {report.version} {report.command}"]
    for name, table in report.tables.items():
        lines.append(f"[{name}] {len(table.rows)} rows: {', '.join(table.columns)}")
        for row in table.rows[:20]:
            lines.append("  " + " ".join(format_value(v) for v in row))
        if len(table.rows) > 20:
            lines.append(f"  ... {len(table.rows) - 20} more")
    lines.extend(c.line() for c in report.checks)
    lines.append(f"wall-clock {report.wall_clock:.3f} s")
    return "\n".join(lines) + "\n"


def _write_csv(path: str, table: Table):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])


def _companion_path(path: str, name: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.{name}{ext or '.csv'}"


def emit_report(report: Report, fmt: str, path: Optional[str] = None) -> List[str]:
    """
    Записывает отчет и возвращает список созданных файлов.

    json: весь отчет; csv: первая таблица в path, остальные рядом с суффиксом
    имени таблицы; text: сводка со строками PASS/FAIL.

    Raises:
        LabError("unwritable"): файл нельзя записать
    """
    if fmt not in ("json", "csv", "text"):
        raise LabError("config", f"unknown report format '{fmt}'")
    if path is None:
        return []
    written = []
    try:
        if fmt == "json":
            with open(path, "w") as f:
                json.dump(report.to_dict(), f, indent=2, sort_keys=True, allow_nan=True)
                f.write("\n")
            written.append(path)
        elif fmt == "csv":
            if not report.tables:
                raise LabError("empty", f"command {report.command} produced no table for CSV output")
            for i, (name, table) in enumerate(report.tables.items()):
                target = path if i == 0 else _companion_path(path, name)
                _write_csv(target, table)
                written.append(target)
        else:
            with open(path, "w") as f:
                f.write(render_text(report))
            written.append(path)
    except OSError as e:
        raise LabError("unwritable", f"cannot write report to {path}: {e}")
    logger.info(f"Отчет {report.command} записан: {', '.join(written)}")
    return written
