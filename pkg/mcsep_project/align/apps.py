from django.apps import AppConfig


class AlignConfig(AppConfig):
    name = "align"
