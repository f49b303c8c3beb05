from django.apps import AppConfig


class SpinlabConfig(AppConfig):
    name = 'spinlab'
    verbose_name = 'Spin squeezing simulation and analysis'
