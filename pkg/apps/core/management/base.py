"""Shared base class for the pipeline management commands."""

import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import RawPipelineError

logger = logging.getLogger(__name__)

# Exit codes shared by every pipeline command.
EXIT_PARTIAL_FAILURE = 1
EXIT_INVALID_INVOCATION = 2


class PipelineCommand(BaseCommand):
    """Base command adding ``--seed`` / ``--threads`` and error mapping.

    Subclasses implement ``add_command_arguments`` and ``run``. Domain
    errors escaping ``run`` become a ``CommandError`` with exit code 2.
    """

    def add_arguments(self, parser):
        """Add the arguments every pipeline command accepts."""
        parser.add_argument(
            "--seed",
            type=int,
            default=settings.PIPELINE_SEED,
            help=f"Base random seed (default: {settings.PIPELINE_SEED})",
        )
        parser.add_argument(
            "--threads",
            type=int,
            default=settings.PIPELINE_THREADS,
            help=(
                "Worker threads; results are identical for any value "
                f"(default: {settings.PIPELINE_THREADS})"
            ),
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        """Hook for command-specific arguments."""

    def handle(self, *args, **options):
        """Validate shared options, then delegate to ``run``."""
        if options["threads"] < 1:
            raise CommandError(
                "--threads must be >= 1", returncode=EXIT_INVALID_INVOCATION
            )
        try:
            return self.run(**options)
        except RawPipelineError as exc:
            logger.error("%s failed: %s", self.__module__.rsplit(".", 1)[-1], exc)
            raise CommandError(str(exc), returncode=EXIT_INVALID_INVOCATION)
        except FileNotFoundError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID_INVOCATION)

    def run(self, **options):
        raise NotImplementedError

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))
