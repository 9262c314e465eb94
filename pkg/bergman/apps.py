from django.apps import AppConfig


class BergmanConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bergman'
    verbose_name = 'Bieberbach polynomial toolkit'
