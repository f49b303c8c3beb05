"""
Исключения модуля реконструкции функции Вигнера.
"""


class InsufficientDataError(ValueError):
    """Слишком мало отсчётов для гистограммы."""


class ContourClippedError(RuntimeError):
    """Линия уровня вокруг максимума не замкнута внутри сетки."""
