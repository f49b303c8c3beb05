"""
Общая часть management-команд: флаги, чтение конфигурации, каталог результатов
и перевод исключений в коды возврата (2 конфигурация, 3 данные, 4 численный сбой).
"""

import logging
import os

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from dynamics_noise import CalibrationError
from metrology import ConstraintInfeasibleError, UndefinedContrastError
from mode_model import ConvergenceError
from spin_core import InvalidStateError
from tomography import FitError, RecordSchemaError, atomic_write_text, read_records_csv
from tomography import InsufficientDataError as TomographyDataError
from wigner import ContourClippedError
from wigner import InsufficientDataError as WignerDataError

from ..config import ConfigError, load_config

logger = logging.getLogger(__name__)

CONFIG_ERROR = 2
DATA_ERROR = 3
NUMERICAL_ERROR = 4

DATA_ERRORS = (RecordSchemaError, TomographyDataError, WignerDataError, UndefinedContrastError, OSError)
NUMERICAL_ERRORS = (
    ConvergenceError, FitError, ContourClippedError, ConstraintInfeasibleError, CalibrationError,
    InvalidStateError, FloatingPointError,
)


class SpinlabCommand(BaseCommand):
    """Команда, работающая по файлу конфигурации; reads_records добавляет позиционный CSV выстрелов."""

    reads_records = False

    def add_arguments(self, parser):
        if self.reads_records:
            parser.add_argument('records', help='CSV выстрелов со столбцами shot,theta_deg,n0,n1')
        parser.add_argument('--config', help='INI-файл конфигурации (по умолчанию встроенные значения)')
        parser.add_argument('--seed', type=int, help='заменяет run.seed')
        parser.add_argument('--out', help='каталог результатов, заменяет run.output_dir')
        parser.add_argument('--shots', type=int, help='заменяет run.shots')

    def handle(self, *args, **options):
        try:
            config = load_config(options['config']).with_overrides(
                seed=options['seed'], shots=options['shots'], output_dir=options['out'],
            )
        except ConfigError as exc:
            raise CommandError(f'Ошибка конфигурации: {exc}', returncode=CONFIG_ERROR)
        output_dir = config.run.output_dir or settings.SPINLAB_DEFAULT_OUTPUT_DIR

        try:
            records = read_records_csv(options['records']) if self.reads_records else None
            self.run(config, output_dir, records, options)
        except DATA_ERRORS as exc:
            raise CommandError(f'Ошибка данных: {exc}', returncode=DATA_ERROR)
        except NUMERICAL_ERRORS as exc:
            logger.debug('Численный сбой', exc_info=True)
            raise CommandError(f'Численный сбой: {exc}', returncode=NUMERICAL_ERROR)

    def run(self, config, output_dir, records, options):
        raise NotImplementedError

    def write(self, output_dir, name, text):
        path = os.path.join(output_dir, name)
        atomic_write_text(path, text)
        self.stdout.write(f'  {path}')
        return path
