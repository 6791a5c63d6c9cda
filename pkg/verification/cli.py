"""Exit codes and error translation shared by the management commands."""

from contextlib import contextmanager

from django.core.management.base import CommandError
from pydantic import ValidationError

from quantum_sdk.recoverability.errors import DecompositionError, RecoverabilityError, SupportError

from .matrix_io import MatrixFileError

EXIT_INVALID = 1
EXIT_SUPPORT = 2
EXIT_DECOMPOSITION = 3
EXIT_VERIFY = 4


@contextmanager
def command_errors():
    """Re-raise library errors as ``CommandError`` with the matching exit code."""
    try:
        yield
    except SupportError as exc:
        raise CommandError(f'support violation: {exc}', returncode=EXIT_SUPPORT) from exc
    except DecompositionError as exc:
        raise CommandError(str(exc), returncode=EXIT_DECOMPOSITION) from exc
    except (MatrixFileError, RecoverabilityError, ValidationError) as exc:
        raise CommandError(str(exc), returncode=EXIT_INVALID) from exc
