from django.apps import AppConfig
from django.test.signals import setting_changed


def _reset_tolerances(*, setting, **kwargs):
    if setting == 'RECOVERABILITY_TOLERANCES':
        from quantum_sdk.recoverability.tolerances import default_tolerances

        default_tolerances.cache_clear()


class VerificationConfig(AppConfig):
    name = 'verification'

    def ready(self):
        setting_changed.connect(_reset_tolerances)
