"""
Celery application for seed-level fan-out of training runs.
"""
import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chasm_project.settings')

app = Celery('chasm_project')
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()
