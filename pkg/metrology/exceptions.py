"""
Исключения модуля метрологических характеристик.
"""


class UndefinedContrastError(ValueError):
    """⟨Sx⟩ = 0: параметр сжатия не определён."""


class ConstraintInfeasibleError(ValueError):
    """Заданная длина среднего спина недостижима для данного j."""
