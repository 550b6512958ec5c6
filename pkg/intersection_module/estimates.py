import cmath
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Sequence

from core.logging import get_logger
from intersection_module.finder import IntersectionRecord, IntersectionPoint
from intersection_module.perturbation import PerturbationFamily
from intersection_module.regions import D1, CASE_1, CASE_2

logger = get_logger()

REGIONS = ("R1", "R2", "D1", "all")


@dataclass
class CheckResult:
    checked: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"checked": self.checked, "passed": self.passed, "violations": self.violations}


@dataclass
class CountReport:
    region: str
    checks: Dict[str, CheckResult] = field(default_factory=dict)
    fitted: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "region": self.region,
            "passed": self.passed,
            "checks": {name: check.to_dict() for name, check in self.checks.items()},
            "fitted": self.fitted
        }


def _in_region(point: IntersectionPoint, region: str) -> bool:
    if region == "all":
        return True
    label = point.region
    if label is None:
        return False
    if region == D1:
        return label.major == D1
    return bool(label.sub) and label.sub.startswith(region)


def _witness(record: IntersectionRecord, point: Optional[IntersectionPoint] = None, **extra) -> Dict[str, Any]:
    witness = {"alpha": [record.alpha.real, record.alpha.imag], "n": record.n,
               "beta": [record.beta.real, record.beta.imag], "m": record.m, "eps": record.eps}
    if point is not None:
        witness["z"] = [point.z.real, point.z.imag]
        witness["w"] = [point.w.real, point.w.imag]
        witness["region"] = str(point.region) if point.region else None
    witness.update(extra)
    return witness


def check_count_bounds(records: Sequence[IntersectionRecord], region: str, squares: int = 8) -> CountReport:
    """
    Проверки счета точек по области.

    R1: номера плакеток отличаются не более чем на 1. D1: в случае 1 не больше
    одной точки на пару плакеток; в случае 2 не больше двух в каждом квадрате
    разбиения прямоугольника плакетки (сторона 2π/squares). Аддитивные константы
    окон (по u', по номеру n, по v и v' в R2) подбираются и сообщаются.
    """
    if region not in REGIONS:
        raise ValueError(f"Unknown region '{region}', expected one of {REGIONS}")
    report = CountReport(region=region)

    if region in ("R1", "all"):
        check = report.checks.setdefault("plaque-index-gap", CheckResult())
        for record in records:
            for point in record.points:
                if _in_region(point, "R1") or (region == "all" and point.region is None):
                    check.checked += 1
                    if abs(record.m - record.n) > 1:
                        check.violations.append(_witness(record, point))

    if region in (D1, "all"):
        single = report.checks.setdefault("case-1-single", CheckResult())
        square = report.checks.setdefault("square-at-most-two", CheckResult())
        side = 2 * math.pi / squares
        for record in records:
            d1 = [p for p in record.points if _in_region(p, D1)]
            if not d1:
                continue
            single.checked += 1
            case_1 = sum(p.multiplicity for p in d1 if p.region.case == CASE_1)
            if case_1 > 1:
                single.violations.append(_witness(record, count=case_1))
            cells = Counter()
            for p in d1:
                if p.region.case == CASE_2:
                    cells[(math.floor(p.zeta.real / side), math.floor(p.zeta.imag / side))] += p.multiplicity
            for cell, count in cells.items():
                square.checked += 1
                if count > 2:
                    square.violations.append(_witness(record, cell=list(cell), count=count))
        _fit_d1_windows(records, report)

    if region in ("R2", "all"):
        _fit_r2_window(records, report)

    for name, check in report.checks.items():
        if not check.passed:
            logger.warning(f"Проверка {name} ({region}): {len(check.violations)} нарушений из {check.checked}")
    return report


def _fit_d1_windows(records: Sequence[IntersectionRecord], report: CountReport):
    u_shift, n_shift = [], []
    for record in records:
        a, b = record.chart.a, record.chart.b
        if record.eps <= 0:
            continue
        log_eps = math.log(1 / record.eps)
        for point in record.points:
            if not _in_region(point, D1):
                continue
            u_shift.append(abs(point.zeta_p.real - (1 - a) / b * log_eps))
            n_shift.append(abs(1 - a) * log_eps / (2 * math.pi * b) - abs(record.n))
    if u_shift:
        report.fitted["u_prime_window"] = max(u_shift)
        report.fitted["n_window"] = max(n_shift)


def _fit_r2_window(records: Sequence[IntersectionRecord], report: CountReport):
    shifts = []
    for record in records:
        a, b = record.chart.a, record.chart.b
        if a == 0 or record.eps <= 0:
            continue
        for point in record.points:
            if _in_region(point, "R2"):
                bound = -2 * record.n * b * math.pi / a + math.log(1 / record.eps) / a
                shifts.append(bound - min(point.zeta.imag, point.zeta_p.imag))
    if shifts:
        report.fitted["v_window"] = max(shifts)


@dataclass
class ClosenessRow:
    lhs_modulus: float
    rhs_modulus: float
    lhs_angle: float
    rhs_angle: float
    holonomy_shift: int

    @property
    def margins(self):
        return self.rhs_modulus - self.lhs_modulus, self.rhs_angle - self.lhs_angle

    def to_dict(self) -> Dict[str, Any]:
        margin_modulus, margin_angle = self.margins
        return {
            "lhs_modulus": self.lhs_modulus, "rhs_modulus": self.rhs_modulus, "margin_modulus": margin_modulus,
            "lhs_angle": self.lhs_angle, "rhs_angle": self.rhs_angle, "margin_angle": margin_angle,
            "holonomy_shift": self.holonomy_shift
        }


@dataclass
class ClosenessReport:
    S: float
    rows: List[ClosenessRow] = field(default_factory=list)

    @property
    def flagged(self) -> List[int]:
        return [i for i, row in enumerate(self.rows) if min(row.margins) < 0]

    @property
    def passed(self) -> bool:
        return not self.flagged

    def to_dict(self) -> Dict[str, Any]:
        return {"S": self.S, "passed": self.passed, "flagged": self.flagged,
                "rows": [row.to_dict() for row in self.rows]}


def closeness_checks(record: IntersectionRecord, fam: PerturbationFamily) -> ClosenessReport:
    """
    Близость параметров листов в точках пересечения (область R1).

    β переносится голономией β ↦ β·e^{−2πiλk} с k, минимизирующим |log(|β|/|α|)|.
    Слева |log(|β|/|α|)| и |arg(β/α)|, справа
    2Sε[e^v(b + |a|) + e^{bu+av}] и 2Se^{bu+av}ε(2|a|/b + 1) + 2Sεe^v(2|a|²/b + b + |a|),
    где S = max(|a1|, |b1|) ограничивает сдвиг особой точки.
    """
    chart = record.chart
    a, b, eps = chart.a, chart.b, record.eps
    S = max(abs(fam.a1), abs(fam.b1))
    k = round(-math.log(abs(record.beta) / abs(record.alpha)) / (2 * math.pi * b))
    transported = record.beta * cmath.exp(-2j * math.pi * chart.lam * k)
    ratio = transported / record.alpha
    lhs_modulus, lhs_angle = abs(math.log(abs(ratio))), abs(cmath.phase(ratio))

    report = ClosenessReport(S=S)
    for point in record.points:
        if point.region is not None and not _in_region(point, "R1"):
            continue
        e_v = 1 / abs(point.z)
        e_w = 1 / abs(point.w)
        rhs_modulus = 2 * S * eps * (e_v * (b + abs(a)) + e_w)
        rhs_angle = 2 * S * e_w * eps * (2 * abs(a) / b + 1) + 2 * S * eps * e_v * (2 * a * a / b + b + abs(a))
        report.rows.append(ClosenessRow(lhs_modulus, rhs_modulus, lhs_angle, rhs_angle, k))
    if not report.passed:
        logger.warning(f"Близость листов нарушена в {len(report.flagged)} точках из {len(report.rows)}")
    return report
