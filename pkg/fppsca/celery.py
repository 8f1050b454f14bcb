import os

from celery import Celery

# Set the default Django settings module for the 'celery' program.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'fppsca.settings')

app = Celery('fppsca')

# Все настройки celery берутся из django.conf:settings с префиксом CELERY_
app.config_from_object('django.conf:settings', namespace='CELERY')

# Задачи ищутся в tasks.py всех установленных приложений (bench.tasks)
app.autodiscover_tasks()
