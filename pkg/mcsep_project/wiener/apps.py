from django.apps import AppConfig


class WienerAppConfig(AppConfig):
    name = "wiener"
