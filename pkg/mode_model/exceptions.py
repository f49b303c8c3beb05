"""
Исключения модуля стационарных мод.
"""


class ConvergenceError(RuntimeError):
    """
    Распространение в мнимом времени не сошлось за отведённое число шагов.

    Args:
        message: описание
        residual: относительное изменение энергии на шаг в момент остановки
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (остаток {residual:.3e})")
        self.residual = residual
