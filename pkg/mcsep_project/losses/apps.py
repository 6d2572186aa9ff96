from django.apps import AppConfig


class LossesConfig(AppConfig):
    name = "losses"
