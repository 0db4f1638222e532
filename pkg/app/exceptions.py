#!/usr/bin/env python3
"""
🚨 EXCEPTIONS v1.0
Иерархия ошибок Lancaster-пакета и коды выхода CLI

Коды выхода: 0 - успех, 2 - использование, 3 - разбор CSV, 4 - домен/численные
"""

from typing import Optional


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DOMAIN = 4


class LancasterError(ValueError):
    """❌ Базовая ошибка пакета"""
    exit_code: int = EXIT_DOMAIN


class DomainError(LancasterError):
    """❌ Аргумент вне области определения"""


class SampleTooSmallError(LancasterError):
    """❌ Слишком маленькая выборка"""

    def __init__(self, n: int, minimum: int):
        super().__init__(f"❌ Нужно минимум {minimum} наблюдений, получено {n}")
        self.n = n
        self.minimum = minimum


class DegenerateSampleError(LancasterError):
    """❌ Нулевая дисперсия в одной из компонент"""


class DegenerateKurtosisError(LancasterError):
    """❌ Четвертый стандартизованный момент <= 1"""


class SingularCorrelationError(LancasterError):
    """❌ |tau| = 1, предельный закон вырожден"""


class MissingTrueValueError(LancasterError):
    """❌ Нет истинного значения коэффициента для покрытия"""
    exit_code = EXIT_USAGE


class ConfigurationError(LancasterError):
    """⚙️ Некорректная конфигурация исследования"""
    exit_code = EXIT_USAGE


class UsageError(LancasterError):
    """⚙️ Некорректные аргументы командной строки"""
    exit_code = EXIT_USAGE


class CsvParseError(LancasterError):
    """📄 Ошибка разбора CSV"""
    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"{message} (строка {line})"
        super().__init__(message)
        self.line = line
