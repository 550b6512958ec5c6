#!/usr/bin/env python3
import argparse
import re
import sys
from dataclasses import fields
from typing import Optional, List, Dict, Any

from core.config import load_config
from core.errors import LabError
from core.logging import setup_logging
from experiments_module import RunConfig, load_run_config, run_command, emit_report, render_text, VERSION
from experiments_module import METRIC_CHECKS, FORMATS
from monitoring import write_metrics


NEGATIVE_VALUE = re.compile(r"^[-−]\d")


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _point_list(text: str) -> List[str]:
    return [p.strip() for p in text.replace("−", "-").split(";") if p.strip()]


def attach_negative_values(argv: List[str]) -> List[str]:
    """
    "--lambda -1,1" в "--lambda=-1,1": argparse принимает значение с минусом
    за флаг, если оно не похоже на простое число.
    """
    result = []
    for token in argv:
        if result and result[-1].startswith("--") and "=" not in result[-1] and NEGATIVE_VALUE.match(token):
            result[-1] = f"{result[-1]}={token}"
        else:
            result.append(token)
    return result


def _common_parser() -> argparse.ArgumentParser:
    """Флаги, общие для всех команд (допустимы после имени команды)"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Файл численной конфигурации (YAML/JSON)", default="config.yaml")
    common.add_argument("--run", help="Файл параметров запуска (YAML/JSON); флаги его переопределяют")
    common.add_argument("--jobs", type=int, help="Число процессов (перекрывает FOLIATION_LAB_JOBS)")
    common.add_argument("--metrics-file", help="Файл метрик Prometheus (текстовый формат)")
    common.add_argument("--log-level", help="Уровень логирования")
    common.add_argument("--out", help="Файл результата")
    common.add_argument("--format", choices=FORMATS, help="Формат результата (по умолчанию по расширению --out)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foliation-lab",
                                     description="Лаборатория голоморфных слоений CP²")
    subparsers = parser.add_subparsers(dest="command", help="Команда")
    common = [_common_parser()]

    sing = subparsers.add_parser("singularities", parents=common, help="Особые точки в карте")
    sing.add_argument("--preset", help="linear:<λ>, jouanolou:<d> или random:<d>:<seed>")
    sing.add_argument("--chart", type=int)
    sing.add_argument("--residual-tol", dest="residual_tol", type=float)

    classify = subparsers.add_parser("classify", parents=common, help="λ и тип каждой особой точки")
    classify.add_argument("--preset")

    sector = subparsers.add_parser("sector", parents=common, help="Сектор модельного листа")
    sector.add_argument("--lambda", dest="lam", help="λ как 're,im'")
    sector.add_argument("--trace-model", dest="trace_model", action="store_const", const=True,
                        help="Вывести полилинию ψ_α по сетке ζ")
    sector.add_argument("--alpha")
    sector.add_argument("--points", type=int)

    trace = subparsers.add_parser("trace", parents=common, help="Трассировка листа")
    trace.add_argument("--preset")
    trace.add_argument("--start", help="Точка 'z,w'")
    trace.add_argument("--arc", type=float)
    trace.add_argument("--chart", type=int)

    poisson = subparsers.add_parser("poisson", parents=common, help="Интеграл Пуассона граничных данных")
    poisson.add_argument("--data", help="CSV со столбцами x,value")
    poisson.add_argument("--tail", choices=("zero-beyond", "power-decay"))
    poisson.add_argument("--decay", type=float)
    poisson.add_argument("--gamma", type=float)
    poisson.add_argument("--at", help="Точка полуплоскости 'U,V'")

    wedge = subparsers.add_parser("wedge", parents=common, help="Геометрическое произведение J_ε(δ)")
    wedge.add_argument("--lambda", dest="lam")
    wedge.add_argument("--a1")
    wedge.add_argument("--b1")
    wedge.add_argument("--eps", type=_float_list)
    wedge.add_argument("--delta", type=_float_list)
    wedge.add_argument("--pairs", type=int)
    wedge.add_argument("--spread", type=float)
    wedge.add_argument("--seed", type=int)
    wedge.add_argument("--slack", type=float)

    ergodic = subparsers.add_parser("ergodic", parents=common, help="Сравнение токов из разных стартов")
    ergodic.add_argument("--preset")
    ergodic.add_argument("--chart", type=int)
    ergodic.add_argument("--starts", type=_point_list, help="Точки 'z,w;z,w'")
    ergodic.add_argument("--N", type=int)
    ergodic.add_argument("--horizon", type=int)
    ergodic.add_argument("--doublings", type=int)
    ergodic.add_argument("--h-walk", dest="h_walk", type=float)
    ergodic.add_argument("--spacing", type=float)
    ergodic.add_argument("--extent", type=float)
    ergodic.add_argument("--lambda", dest="lam", help="λ модельного листа для закона выхода")
    ergodic.add_argument("--exit-start", dest="exit_start")
    ergodic.add_argument("--seed", type=int)
    ergodic.add_argument("--slack", type=float)
    ergodic.add_argument("--ks-max", dest="ks_max", type=float)

    metric = subparsers.add_parser("metric", parents=common, help="Проверки метрики g_T и меры μ_T")
    metric.add_argument("--check", choices=METRIC_CHECKS)
    metric.add_argument("--samples", type=int)
    metric.add_argument("--seed", type=int)
    metric.add_argument("--lambda", dest="lam")
    metric.add_argument("--radii", type=_float_list)
    metric.add_argument("--panels", type=int)
    metric.add_argument("--curvature-tol", dest="curvature_tol", type=float)
    metric.add_argument("--schwarz-tol", dest="schwarz_tol", type=float)
    metric.add_argument("--mass-tol", dest="mass_tol", type=float)

    sweep = subparsers.add_parser("family-sweep", parents=common, help="Непрерывность семейства по λ")
    sweep.add_argument("--lambda-path", dest="lambda_path", help="'re,im -> re,im'")
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--mass-radius", dest="mass_radius", type=float)
    sweep.add_argument("--panels", type=int)

    return parser


def run_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Значения флагов, совпадающие с полями RunConfig"""
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    overrides["command"] = args.command
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Основная функция CLI"""
    parser = build_parser()
    args = parser.parse_args(attach_negative_values(sys.argv[1:] if argv is None else list(argv)))
    if args.command is None:
        parser.print_help()
        return 2

    # Загружаем конфигурацию
    try:
        lab = load_config(args.config)
    except (ValueError, OSError) as e:
        print(f"FAIL config: {e}")
        return 1
    if args.jobs is not None:
        lab.jobs = args.jobs
    logger = setup_logging(args.log_level)

    try:
        cfg = load_run_config(args.run, run_overrides(args))
    except (LabError, OSError) as e:
        logger.error(f"Ошибка в параметрах запуска: {e}")
        print(f"FAIL config: {e}")
        return 1

    report = run_command(cfg, jobs=lab.jobs)
    try:
        emit_report(report, cfg.output_format, cfg.out)
    except LabError as e:
        logger.error(f"Ошибка записи отчета: [{e.code}] {e.message}")
        report.check("output", False, f"{e.code}: {e.message}")
    sys.stdout.write(render_text(report))

    metrics_file = args.metrics_file or lab.monitoring.metrics_file
    if metrics_file:
        write_metrics(metrics_file, VERSION)
        logger.info(f"Метрики записаны в {metrics_file}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
