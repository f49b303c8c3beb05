from wigner import format_contour_csv, format_grid_csv, format_grid_gnuplot

from ... import pipeline
from ..base import SpinlabCommand


class Command(SpinlabCommand):
    help = 'Восстанавливает функцию Вигнера обратным преобразованием Радона и линию уровня 1/√e'
    reads_records = True

    def run(self, config, output_dir, records, options):
        result = pipeline.reconstruct(config, records)
        self.stdout.write(f'Углов: {result.n_angles}, ⟨N⟩ = {result.mean_atoms:.1f}')
        self.stdout.write(
            f'Площадь контура {result.contour.enclosed_area:.2f}, '
            f'когерентное состояние {result.reference_area:.2f} '
            f'(отношение {result.contour.enclosed_area / result.reference_area:.3f})'
        )
        self.write(output_dir, 'wigner.csv', format_grid_csv(result.grid))
        self.write(output_dir, 'wigner.dat', format_grid_gnuplot(result.grid))
        self.write(output_dir, 'contour.csv', format_contour_csv(result.contour))
        self.stdout.write(self.style.SUCCESS('Готово'))
