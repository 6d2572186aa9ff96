from django.apps import AppConfig


class SimkitConfig(AppConfig):
    name = "simkit"
