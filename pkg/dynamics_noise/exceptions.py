"""
Исключения модуля динамики с шумами.
"""

from typing import Optional


class CalibrationError(RuntimeError):
    """
    Скручивание не удаётся подобрать под целевой уровень сжатия.

    Args:
        message: описание
        target_db: целевой уровень (дБ), если он был задан
    """

    def __init__(self, message: str, target_db: Optional[float] = None):
        super().__init__(message)
        self.target_db = target_db
