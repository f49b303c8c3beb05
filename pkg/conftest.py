import os

import django

# Тесты spinlab написаны под Django test runner: настраиваем Django так же, как manage.py
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'squeezelab.settings')
django.setup()
