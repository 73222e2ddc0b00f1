import hashlib
import logging
import sys
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from tabkey.exceptions import PredictorError, TabkeyError

logger = logging.getLogger('tabkey.commands')

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PREDICTOR = 3

# options every Django command carries; left out of the run header
DJANGO_OPTIONS = {
    'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color',
    'skip_checks',
}


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def unique_name(name, taken):
    """`name`, or `name-2`, `name-3`... if already in `taken`."""
    name = name or 'trace'
    candidate = name
    suffix = 2
    while candidate in taken:
        candidate = f"{name}-{suffix}"
        suffix += 1
    taken.add(candidate)
    return candidate


class TabkeyCommand(BaseCommand):
    """Base for tabkey's commands.

    Subclasses implement `run(**options)` and list the options naming input
    files in `input_options`. Library errors become CommandErrors carrying
    the exit code: 1 usage, 2 data, 3 predictor.
    """
    requires_system_checks = []
    input_options = ()

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        if parser.called_from_command_line:
            def usage_error(message):
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            parser.error = usage_error
        return parser

    def usage_error(self, message):
        return CommandError(message, returncode=EXIT_USAGE)

    def input_paths(self, options):
        for name in self.input_options:
            value = options.get(name)
            if not value:
                continue
            for path in (value if isinstance(value, (list, tuple)) else [value]):
                yield name, path

    def log_header(self, options):
        resolved = {
            name: value for name, value in sorted(options.items())
            if name not in DJANGO_OPTIONS
        }
        logger.info(f"tabkey {self.command_name} {resolved}")
        for name, path in self.input_paths(options):
            logger.info(f"input {name}={path} sha256={file_digest(path)}")

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def handle(self, *args, **options):
        verbosity = options.get('verbosity', 1)
        if verbosity >= 2:
            logging.getLogger('tabkey').setLevel(logging.DEBUG)
        elif verbosity == 0:
            logging.getLogger('tabkey').setLevel(logging.WARNING)

        for name, path in self.input_paths(options):
            if not Path(path).is_file():
                raise CommandError(f"--{name.replace('_', '-')}: no such file {path}",
                                   returncode=EXIT_DATA)
        try:
            self.log_header(options)
            return self.run(**options)
        except CommandError:
            raise
        except PredictorError as exc:
            raise CommandError(str(exc), returncode=EXIT_PREDICTOR) from exc
        except (TabkeyError, OSError, UnicodeDecodeError) as exc:
            raise CommandError(str(exc), returncode=EXIT_DATA) from exc

    def run(self, **options):
        raise NotImplementedError
