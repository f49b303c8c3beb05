"""
Исключения модуля томографии.
"""
from typing import Optional


class RecordSchemaError(ValueError):
    """
    Нарушение схемы CSV с записями выстрелов.

    Args:
        message: описание
        column: столбец, в котором обнаружена ошибка
    """

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message if column is None else f"{column}: {message}")
        self.column = column


class FitError(RuntimeError):
    """Вырожденная система в задаче наименьших квадратов."""


class InsufficientDataError(ValueError):
    """Недостаточно выстрелов для статистики."""
