import numpy as np

from tomography import format_tomogram_csv

from ... import pipeline
from ..base import SpinlabCommand


class Command(SpinlabCommand):
    help = 'Томограмма Δ_n S_θ² по CSV выстрелов и отчёт о сжатии (ξ², глубина запутанности)'
    reads_records = True

    def run(self, config, output_dir, records, options):
        analysis = pipeline.analyse(config, records)
        self.stdout.write(f'Выстрелов после постселекции: {analysis.n_selected} из {analysis.n_total}')
        for row in analysis.tomogram.rows:
            marker = ' (отрицательная)' if row.negative else ''
            self.stdout.write(f'  θ = {np.degrees(row.theta):8.3f}°  {row.normalized_db:8.3f} дБ{marker}')
        for key, value in analysis.report.as_rows():
            self.stdout.write(f'{key} = {value}')
        self.write(output_dir, 'tomogram.csv', format_tomogram_csv(analysis.tomogram))
        self.write(output_dir, 'report.csv', pipeline.format_report_csv(analysis.report))
        self.stdout.write(self.style.SUCCESS('Готово'))
