"""
Исключения модуля коллективного спина.
"""


class InvalidStateError(ValueError):
    """Некорректное состояние или аргумент (N < 1, неверная длина амплитуд и т.п.)."""
