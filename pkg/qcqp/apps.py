from django.apps import AppConfig


class QcqpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'qcqp'
    verbose_name = 'Complex QCQP instances'
