"""
Настройки Django-проекта squeezelab.

Проект используется только как оболочка для management-команд приложения spinlab:
базы данных, шаблонов и middleware нет.
"""

import os
import sys
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Библиотечные пакеты (spin_core, mode_model, ...) лежат в корне репозитория
REPO_ROOT = str(BASE_DIR.parent)
if REPO_ROOT not in sys.path:
    sys.path.insert(0, REPO_ROOT)

SECRET_KEY = os.environ.get('SQUEEZELAB_SECRET_KEY', 'squeezelab-offline-batch-only')

DEBUG = False

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'spinlab',
]

DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# Каталог для результатов, если он не задан ни в конфигурации, ни флагом --out
SPINLAB_DEFAULT_OUTPUT_DIR = os.environ.get('SQUEEZELAB_OUTPUT_DIR', str(BASE_DIR / 'out'))

LOG_LEVEL = os.environ.get('SQUEEZELAB_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}
