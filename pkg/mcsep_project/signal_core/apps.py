from django.apps import AppConfig


class SignalCoreConfig(AppConfig):
    name = "signal_core"
