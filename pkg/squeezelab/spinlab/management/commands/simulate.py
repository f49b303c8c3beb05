import numpy as np

from tomography import format_records_csv

from ... import pipeline
from ..base import SpinlabCommand


class Command(SpinlabCommand):
    help = 'Моделирует выстрелы последовательности импульс–скручивание–импульс для всех углов θ и пишет records.csv'

    def run(self, config, output_dir, records, options):
        records = pipeline.simulate(config)
        self.stdout.write(
            f'Смоделировано {len(records)} выстрелов: {len(config.thetas)} углов × {config.run.shots}, '
            f'seed = {config.run.seed}'
        )
        self.write(output_dir, 'records.csv', format_records_csv(records))
        totals = np.array([record.total for record in records])
        self.stdout.write(f'⟨N⟩ = {totals.mean():.1f}, ΔN = {totals.std():.1f}')
        self.stdout.write(self.style.SUCCESS('Готово'))
