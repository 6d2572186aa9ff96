from django.apps import AppConfig


class FcpAppConfig(AppConfig):
    name = "fcp"
