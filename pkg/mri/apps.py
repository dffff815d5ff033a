from django.apps import AppConfig

class MriConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'mri'
