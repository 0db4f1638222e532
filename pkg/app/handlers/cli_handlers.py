#!/usr/bin/env python3
"""
🎛️ CLI HANDLERS v1.0
🔥 Обработчики команд estimate, test, ci, study, truth

Каждый обработчик - async-функция (args, config) -> код выхода.
stdout получает только результат (таблица, CSV или JSON).
"""

import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pandas.errors import EmptyDataError, ParserError

from app.exceptions import EXIT_OK, CsvParseError, UsageError
from app.modules.estimators import (
    CoefficientKind,
    Sample,
    evaluate_coefficient,
    lancaster_linear,
    lancaster_rank,
)
from app.modules.inference import (
    AsymptoticMode,
    CIMethod,
    TestResult,
    confidence_interval,
    test_linear_asymptotic,
    test_permutation,
    test_permutation_exact,
    test_rank_asymptotic,
)
from app.modules.samplers import draw, parse_distribution
from app.services.experiment_service import (
    ExperimentService,
    load_study_config,
    parse_study_config,
)
from app.services.report_service import format_table, write_report
from app.services.truth_service import TruthService
from database import ResultsDatabase

logger = logging.getLogger(__name__)

TEST_METHODS = [
    "rank_asymptotic", "rank_permutation", "linear_permutation",
    "linear_asymptotic_sym", "linear_asymptotic_tau",
    "pearson", "spearman", "dcor", "xi", "exact_permutation",
]
_TEST_COEFFICIENT = {
    "rank_permutation": CoefficientKind.LANCASTER_RANK,
    "linear_permutation": CoefficientKind.LANCASTER_LINEAR,
    "pearson": CoefficientKind.PEARSON,
    "spearman": CoefficientKind.SPEARMAN,
    "dcor": CoefficientKind.DCOR,
    "xi": CoefficientKind.XI,
}


def _emit(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dumps(payload: Dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


# =================== CSV ===================

def _is_number(value: str) -> bool:
    try:
        float(value)
        return True
    except (TypeError, ValueError):
        return False


def _select(selector: str, header: Optional[List[str]], width: int) -> int:
    """Колонка по имени или 0-based индексу"""
    if header is not None and selector in header:
        return header.index(selector)
    if selector.isdigit() and int(selector) < width:
        return int(selector)
    raise UsageError(f"❌ Колонка {selector!r} не найдена")


def read_pair_csv(path: Path, x: str = "0", y: str = "1") -> Sample:
    """📄 Две числовые колонки из CSV; заголовок определяется по первой строке"""
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                            skip_blank_lines=False, skipinitialspace=True)
    except FileNotFoundError as e:
        raise UsageError(f"❌ Файл не найден: {path}") from e
    except EmptyDataError as e:
        raise CsvParseError(f"❌ Пустой файл {path}") from e
    except ParserError as e:
        raise CsvParseError(f"❌ Некорректный CSV: {e}") from e

    # пустые строки не участвуют, но нумерация строк файла сохраняется
    frame = frame[~(frame.fillna("") == "").all(axis=1)]
    if frame.empty:
        raise CsvParseError(f"❌ В файле {path} нет данных")
    if frame.shape[1] < 2:
        raise UsageError("❌ Нужно минимум две колонки")

    first = frame.iloc[0].tolist()
    header = None
    if not all(_is_number(v) for v in first):
        header = [str(v).strip() for v in first]
        frame = frame.iloc[1:]
    ix, iy = _select(x, header, frame.shape[1]), _select(y, header, frame.shape[1])

    columns = []
    for index in (ix, iy):
        raw = frame.iloc[:, index]
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna()
        if bad.any():
            line = int(raw.index[bad.to_numpy().argmax()]) + 1
            cell = raw[bad].iloc[0]
            raise CsvParseError(f"❌ Нечисловое значение {cell!r} в колонке {index}", line=line)
        columns.append(values.to_numpy(dtype=float))
    return Sample(columns[0], columns[1])


# =================== КОМАНДЫ ===================

async def cmd_estimate(args, config) -> int:
    """📊 Коэффициенты корреляции по CSV"""
    if args.dump_sample:
        if args.seed is None:
            raise UsageError("❌ Для --dump-sample нужен --seed")
        xs, ys = draw(parse_distribution(args.dump_sample), args.n, args.seed)
        text = pd.DataFrame({"x": xs, "y": ys}).to_csv(index=False, float_format="%.17g")
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
            logger.info(f"💾 Выборка записана в {args.output}")
        else:
            _emit(text)
        return EXIT_OK

    if not args.input:
        raise UsageError("❌ Укажите входной CSV")
    s = read_pair_csv(Path(args.input), args.x, args.y)
    rng = np.random.default_rng(args.seed)
    rows = []
    for name in args.coefficients:
        kind = CoefficientKind(name)
        row = {"coefficient": name, "value": None, "rho1": None, "rho2": None, "ties": False}
        if kind in (CoefficientKind.LANCASTER_RANK, CoefficientKind.LANCASTER_LINEAR):
            estimate = lancaster_rank(s) if kind is CoefficientKind.LANCASTER_RANK else lancaster_linear(s)
            row.update(value=estimate.value, rho1=estimate.rho1, rho2=estimate.rho2, ties=estimate.ties)
        else:
            row["value"] = evaluate_coefficient(kind, s, rng)
        rows.append(row)

    if args.format == "json":
        _emit(_dumps({"n": s.n, "estimates": rows}))
    else:
        frame = pd.DataFrame(rows)
        if args.format == "csv":
            _emit(frame.to_csv(index=False, float_format="%.17g"))
        else:
            _emit(frame.to_string(index=False, float_format=lambda v: f"{v:.3f}", na_rep="-"))
    return EXIT_OK


def run_test(s: Sample, method: str, n_permutations: int, seed: int, coefficient: str) -> TestResult:
    """🧪 Тест по идентификатору метода"""
    if method == "rank_asymptotic":
        return test_rank_asymptotic(s)
    if method == "linear_asymptotic_sym":
        return test_linear_asymptotic(s, AsymptoticMode.ASSUME_SYMMETRIC)
    if method == "linear_asymptotic_tau":
        return test_linear_asymptotic(s, AsymptoticMode.ESTIMATE_TAU)
    if method == "exact_permutation":
        return test_permutation_exact(s, CoefficientKind(coefficient))
    return test_permutation(s, _TEST_COEFFICIENT[method], n_permutations, seed)


async def cmd_test(args, config) -> int:
    """🧪 Тест независимости, JSON {statistic, p_value, method, n, seed}"""
    s = read_pair_csv(Path(args.input), args.x, args.y)
    n_permutations = args.permutations or config.inference.n_permutations
    result = run_test(s, args.method, n_permutations, args.seed, args.coefficient)
    _emit(_dumps({
        "statistic": result.statistic,
        "p_value": result.p_value,
        "method": result.method.value,
        "coefficient": result.coefficient.value if result.coefficient else None,
        "n_permutations": result.n_permutations,
        "n": s.n,
        "seed": args.seed,
    }))
    return EXIT_OK


async def cmd_ci(args, config) -> int:
    """📏 Доверительный интервал, JSON {lower, upper, level, method, estimate, n, seed}"""
    s = read_pair_csv(Path(args.input), args.x, args.y)
    level = args.level if args.level is not None else config.inference.level
    interval = confidence_interval(
        s, CIMethod(args.method), level,
        n_bootstrap=args.bootstrap or config.inference.n_bootstrap,
        seed=args.seed, delta=config.inference.delta, max_redraws=config.inference.max_redraws,
    )
    _emit(_dumps({
        "lower": interval.lower,
        "upper": interval.upper,
        "level": interval.level,
        "method": interval.method.value,
        "estimate": interval.estimate,
        "lower_truncated": interval.lower_truncated,
        "upper_truncated": interval.upper_truncated,
        "n": s.n,
        "seed": args.seed,
    }))
    return EXIT_OK


async def cmd_study(args, config) -> int:
    """🎲 Monte Carlo исследование по TOML-конфигурации"""
    study = load_study_config(Path(args.config))
    overrides = {k: v for k, v in (("seed", args.seed), ("replications", args.replications)) if v is not None}
    if overrides:
        study = parse_study_config({**study.model_dump(mode="json"), **overrides})
    if args.workers:
        config.study.workers = args.workers

    async with ResultsDatabase(config.database) as db:
        service = ExperimentService(config, db, TruthService(config, db))
        report = await service.run(study)
    await write_report(report, Path(args.out))
    _emit(format_table(report))
    return EXIT_OK


async def cmd_truth(args, config) -> int:
    """📌 Пересчет файла истинных значений"""
    if args.full_scale:
        config.study.full_scale = True
    async with ResultsDatabase(config.database) as db:
        values = await TruthService(config, db).regenerate(
            args.distributions, Path(args.out) if args.out else None)
    for value in values:
        _emit(f"{value.distribution}\t{value.estimator}\t{value.value:.6f}\t{value.provenance}")
    return EXIT_OK


# =================== РЕГИСТРАЦИЯ ===================

def _add_columns(parser):
    parser.add_argument("--x", default="0", help="колонка X: имя или 0-based индекс")
    parser.add_argument("--y", default="1", help="колонка Y: имя или 0-based индекс")


def register_cli_handlers(subparsers):
    """🎛️ Регистрация подкоманд"""
    estimate = subparsers.add_parser("estimate", help="коэффициенты корреляции")
    estimate.add_argument("input", nargs="?")
    _add_columns(estimate)
    estimate.add_argument("--coefficients", nargs="+", default=[k.value for k in CoefficientKind],
                          choices=[k.value for k in CoefficientKind])
    estimate.add_argument("--format", choices=["table", "csv", "json"], default="table")
    estimate.add_argument("--seed", type=int)
    estimate.add_argument("--dump-sample", metavar="DIST")
    estimate.add_argument("--n", type=int, default=10_000)
    estimate.add_argument("--output")
    estimate.set_defaults(handler=cmd_estimate)

    test = subparsers.add_parser("test", help="тест независимости")
    test.add_argument("input")
    _add_columns(test)
    test.add_argument("--method", choices=TEST_METHODS, default="rank_asymptotic")
    test.add_argument("--coefficient", choices=[k.value for k in CoefficientKind], default="lancaster_rank")
    test.add_argument("--permutations", type=int)
    test.add_argument("--seed", type=int, required=True)
    test.set_defaults(handler=cmd_test)

    ci = subparsers.add_parser("ci", help="доверительный интервал")
    ci.add_argument("input")
    _add_columns(ci)
    ci.add_argument("--method", choices=[m.value for m in CIMethod], default=CIMethod.BOOT_RANK.value)
    ci.add_argument("--level", type=float)
    ci.add_argument("--bootstrap", type=int)
    ci.add_argument("--seed", type=int, required=True)
    ci.set_defaults(handler=cmd_ci)

    study = subparsers.add_parser("study", help="Monte Carlo исследование")
    study.add_argument("config")
    study.add_argument("--out", default="data/reports")
    study.add_argument("--seed", type=int)
    study.add_argument("--replications", type=int)
    study.add_argument("--workers", type=int)
    study.set_defaults(handler=cmd_study)

    truth = subparsers.add_parser("truth", help="истинные значения ρ_L / ρ_L,l")
    truth.add_argument("distributions", nargs="+")
    truth.add_argument("--out")
    truth.add_argument("--full-scale", action="store_true", help="Monte Carlo при n = 10⁷")
    truth.set_defaults(handler=cmd_truth)

    logger.debug("✅ CLI обработчики зарегистрированы")
