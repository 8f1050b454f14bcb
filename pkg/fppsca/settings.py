"""
Django settings for fppsca project.

Проект без базы данных и без веб-части: Django здесь отвечает за настройки,
команды управления (manage.py gen/solve/sdr/bench/multicast/fig1) и тесты.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

from pathlib import Path

import environ

env = environ.Env(
    DEBUG=(bool, False),
    LOG_LEVEL=(str, 'WARNING'),
    CELERY_TASK_ALWAYS_EAGER=(bool, True),
    FPP_LAMBDA=(float, 10.0),
    FPP_MAX_ITER=(int, 30),
    FPP_CONV_TOL=(float, 1e-4),
    FPP_FEAS_TOL=(float, 1e-6),
    FPP_SLACK_ZERO_TOL=(float, 1e-7),
    FPP_KKT_TOL=(float, 1e-5),
    FPP_KKT_REFINE=(int, 20),
    ENGINE_MAX_NEWTON=(int, 200),
    ENGINE_MAX_OUTER=(int, 60),
    ENGINE_GAP_TOL=(float, 1e-9),
    ENGINE_REGULARIZATION=(float, 1e-12),
    SDR_DRAWS=(int, 10000),
    SDR_RANK1_RATIO=(float, 1e-6),
    BENCH_JOBS=(int, 1),
    BENCH_BACKEND=(str, 'local'),
    BENCH_MAX_FAILURE_RATE=(float, 0.05),
)

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

environ.Env.read_env(BASE_DIR / '.env')

# Ключ нужен Django даже без веб-части, поэтому есть значение по умолчанию
SECRET_KEY = env('SECRET_KEY', default='fppsca-local-only')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = ['localhost']

# Application definition

INSTALLED_APPS = [
    'celery',

    'qcqp',
    'solvers',
    'bench',
]

# Моделей нет, база данных не используется
DATABASES = {}

USE_TZ = True

# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': env('LOG_LEVEL'),
    },
}

# FPP-SCA, значения по умолчанию повторяют постановку экспериментов (lambda=10, 30 итераций, 1e-4)

FPP = {
    'LAMBDA': env('FPP_LAMBDA'),
    'MAX_ITER': env('FPP_MAX_ITER'),
    'CONV_TOL': env('FPP_CONV_TOL'),
    'FEAS_TOL': env('FPP_FEAS_TOL'),
    'SLACK_ZERO_TOL': env('FPP_SLACK_ZERO_TOL'),
    'KKT_TOL': env('FPP_KKT_TOL'),
    'KKT_REFINE': env('FPP_KKT_REFINE'),
}

# Барьерный метод (выпуклые подзадачи и SDP)

ENGINE = {
    'MAX_NEWTON': env('ENGINE_MAX_NEWTON'),
    'MAX_OUTER': env('ENGINE_MAX_OUTER'),
    'GAP_TOL': env('ENGINE_GAP_TOL'),
    'T0': 1.0,
    'MU': 10.0,
    'ALPHA': 0.25,
    'BETA': 0.5,
    'NEWTON_TOL': 1e-10,
    'REGULARIZATION': env('ENGINE_REGULARIZATION'),
    'REGULARIZATION_RETRIES': 3,
    'SDP_EPSILON': 1e-8,
    'SDP_PHASE1_TOL': 1e-7,
}

# SDR + рандомизация

SDR = {
    'DRAWS': env('SDR_DRAWS'),
    'RANK1_RATIO': env('SDR_RANK1_RATIO'),
    'BATCH': 1000,
}

# Монте-Карло

BENCH = {
    'JOBS': env('BENCH_JOBS'),
    # local - пул процессов, celery - задачи через брокер
    'BACKEND': env('BENCH_BACKEND'),
    'MAX_FAILURE_RATE': env('BENCH_MAX_FAILURE_RATE'),
    # Средние потери SDR не считаются, если допустимых запусков меньше
    'MIN_LOSS_RUNS': 5,
    'OUTPUT_DIR': env('BENCH_OUTPUT_DIR', default=str(BASE_DIR / 'results')),
}

# REDIS

REDIS_URL = env('REDIS_URL', default='redis://localhost:6379')

# CELERY

CELERY_BROKER_URL = REDIS_URL
CELERY_RESULT_BACKEND = REDIS_URL
CELERY_TASK_ALWAYS_EAGER = env('CELERY_TASK_ALWAYS_EAGER')
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
