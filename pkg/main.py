#!/usr/bin/env python3
"""
📊 LANCASTER CORRELATION TOOLKIT v1.0
🔥 Командная строка: оценки, тесты, интервалы, исследования

Коды выхода: 0 - успех, 2 - использование, 3 - разбор CSV, 4 - домен/численные
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import load_config
from app.exceptions import LancasterError
from app.handlers.cli_handlers import register_cli_handlers

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


def setup_logging(level: str, file_path: Optional[str]):
    """📝 Логи: stderr + файл; stdout остается для результатов"""
    root = logging.getLogger()
    root.setLevel(getattr(logging, level, logging.INFO))
    if not any(getattr(h, "_lancaster", False) for h in root.handlers):
        stream = logging.StreamHandler(sys.stderr)
        stream.setFormatter(logging.Formatter(LOG_FORMAT))
        stream._lancaster = True
        root.addHandler(stream)
        if file_path:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(file_path, encoding="utf-8")
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            file_handler._lancaster = True
            root.addHandler(file_handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lancaster",
        description="Коэффициенты корреляции Ланкастера: оценки, тесты независимости, интервалы",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_cli_handlers(subparsers)
    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """📊 Точка входа"""
    config = load_config()
    setup_logging(config.logging.level, config.logging.file_path)
    args = build_parser().parse_args(argv)

    try:
        return await args.handler(args, config)
    except LancasterError as e:
        logger.error(f"💥 {type(e).__name__}: {e}")
        print(str(e), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
