from ... import pipeline
from ..base import SpinlabCommand


class Command(SpinlabCommand):
    help = 'Таблица (s, λ, χ) по смещениям [modes] separations_um; с --profile также χ(t) расщепления'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--profile', action='store_true', help='записать split_profile.csv')

    def run(self, config, output_dir, records, options):
        rows = pipeline.chi_curve(config)
        for row in rows:
            self.stdout.write(f'  s = {row.separation * 1e6:6.3f} мкм  λ = {row.overlap:.4f}  χ = {row.chi:.4f} 1/с')
        self.write(output_dir, 'chi_curve.csv', pipeline.format_chi_curve_csv(rows))
        if options['profile']:
            profile = pipeline.split_profile(config)
            self.stdout.write(
                f'∫χdt = {profile.twist_integral():.4e} рад, оценка контраста {profile.contrast_estimate:.3f}'
            )
            self.write(output_dir, 'split_profile.csv', pipeline.format_profile_csv(profile))
        self.stdout.write(self.style.SUCCESS('Готово'))
