from ... import pipeline
from ..base import SpinlabCommand


class Command(SpinlabCommand):
    help = 'Калибровка числа атомов: подгонка ΔSz² = aN + bN² по интервалам N'
    reads_records = True

    def run(self, config, output_dir, records, options):
        fit = pipeline.calibrate(config, records)
        self.stdout.write(f'a = {fit.a:.4f} ± {fit.a_stderr:.4f}')
        self.stdout.write(f'b = {fit.b:.3e} ± {fit.b_stderr:.3e}')
        self.stdout.write(f'rescale = {fit.rescale:.4f}')
        self.stdout.write(f'наклон через ноль = {fit.slope_through_origin:.4f} ± {fit.slope_stderr:.4f}')
        self.write(output_dir, 'calibration.csv', pipeline.format_calibration_csv(fit))
        self.stdout.write(self.style.SUCCESS('Готово'))
