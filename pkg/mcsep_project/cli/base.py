"""
Shared base for the toolkit's management commands.

Options are merged from, lowest to highest precedence, the command's
defaults, the `common` section of a YAML run file, the command's own
section of that file and the command line. Toolkit failures leave the
process with a `CommandError` exit code: 1 for invalid input, 2 for
unreadable or unwritable files and 3 for numerical failures.
"""

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import soundfile as sf
import yaml
from django.core.management import (
    BaseCommand,
    CommandError,
    get_commands,
    load_command_class,
)
from mcsep_project import __version__
from mcsep_project.exceptions import MCSepError, NumericalError

logger = logging.getLogger(__name__)

APP_NAME = "cli"
MANIFEST_FILE = "manifest.yaml"
COMMON_SECTION = "common"
VERBOSITY_LEVELS = {
    0: logging.WARNING,
    1: logging.INFO,
    2: logging.DEBUG,
    3: logging.DEBUG,
}

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def toolkit_commands():
    return sorted(
        name for name, app in get_commands().items() if app == APP_NAME
    )


def known_options():
    """Every option that at least one toolkit command accepts."""

    return set().union(
        *(
            load_command_class(APP_NAME, name).defaults
            for name in toolkit_commands()
        )
    )


def section_name(section):
    return str(section).replace("-", "_")


def read_run_file(path):
    """Parse a YAML run file into {section: {key: value}}."""

    try:
        content = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise CommandError(f"{path} is not valid YAML: {exc}") from exc
    content = content or {}
    if not isinstance(content, dict) or not all(
        isinstance(section, dict) for section in content.values()
    ):
        raise CommandError(f"{path} must hold one mapping per section")
    content = {
        section_name(section): values for section, values in content.items()
    }
    unknown = set(content) - {COMMON_SECTION} - set(toolkit_commands())
    if unknown:
        raise CommandError(
            f"unknown sections in {path}: {', '.join(sorted(unknown))}"
        )
    return content


def sha256_of(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def write_manifest(out_dir, command, options, outputs):
    """Write manifest.yaml: the command, its merged options, seed, package
    version and the sha256 of every output, relative to out_dir."""

    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "options": {key: _plain(value) for key, value in options.items()},
        "seed": options.get("seed"),
        "version": __version__,
        "outputs": {
            Path(path).relative_to(out_dir).as_posix(): sha256_of(path)
            for path in sorted(outputs)
        },
    }
    path = out_dir / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(manifest, sort_keys=True))
    return path


class ToolkitCommand(BaseCommand):
    # dest -> default for every option a run file may set
    defaults = {}
    required = ()
    requires_system_checks = []

    @property
    def name(self):
        return type(self).__module__.rsplit(".", 1)[-1]

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.add_argument(
            "--config", type=Path, help="YAML run file with option sections"
        )
        # argument errors are validation errors (exit 1), not usage exits
        parser.called_from_command_line = False
        for action in parser._actions:
            if action.dest in self.defaults:
                action.default = argparse.SUPPRESS
        return parser

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except CommandError as exc:
            self.stderr.write(f"{type(exc).__name__}: {exc}")
            sys.exit(exc.returncode)

    def _coerce(self, parser, key, value, source):
        action = next((a for a in parser._actions if a.dest == key), None)
        if action is None or value is None:
            return value
        if action.type is not None and not isinstance(value, bool):
            try:
                value = action.type(value)
            except (TypeError, ValueError) as exc:
                raise CommandError(
                    f"invalid value {value!r} for {key} in {source}"
                ) from exc
        if action.choices is not None and value not in action.choices:
            raise CommandError(
                f"{key} must be one of {sorted(action.choices)}, "
                f"got {value!r} in {source}"
            )
        return value

    def run_file_options(self, config):
        """Options from the run file's `common` and own sections. `common`
        keys that only other commands declare are skipped."""

        content = read_run_file(config)
        parser = self.create_parser("manage.py", self.name)
        shared = known_options()
        options = {}
        for section in (COMMON_SECTION, self.name):
            source = f"{config} [{section}]"
            for key, value in content.get(section, {}).items():
                if key not in self.defaults:
                    if section == COMMON_SECTION and key in shared:
                        logger.debug("%s: skipping %s", source, key)
                        continue
                    raise CommandError(
                        f"unknown option {key!r} in {source} for {self.name}"
                    )
                options[key] = self._coerce(parser, key, value, source)
        return options

    def merge_options(self, options):
        merged = dict(self.defaults)
        if options.get("config") is not None:
            merged.update(self.run_file_options(options["config"]))
        merged.update(
            (key, value)
            for key, value in options.items()
            if key in self.defaults
        )
        missing = [key for key in self.required if merged.get(key) is None]
        if missing:
            raise CommandError(
                f"{self.name} needs {', '.join('--' + k for k in missing)}"
            )
        return merged

    def execute(self, *args, **options):
        logging.getLogger().setLevel(VERBOSITY_LEVELS[options["verbosity"]])
        base = {
            key: value
            for key, value in options.items()
            if key not in self.defaults
        }
        try:
            merged = self.merge_options(options)
            return super().execute(*args, **base, **merged)
        except CommandError:
            raise
        except NumericalError as exc:
            raise self.failure(exc, EXIT_NUMERICAL) from exc
        except MCSepError as exc:
            raise self.failure(exc, EXIT_VALIDATION) from exc
        except (OSError, sf.SoundFileError) as exc:
            raise self.failure(exc, EXIT_IO) from exc

    @staticmethod
    def failure(exc, returncode):
        return CommandError(
            f"{type(exc).__name__}: {exc}", returncode=returncode
        )

    def finish(self, options, outputs):
        """Record the outputs in manifest.yaml; the manifest path is the
        command's output."""

        manifest = write_manifest(
            options["out"],
            self.name,
            {key: options[key] for key in self.defaults},
            outputs,
        )
        logger.info("wrote %s", manifest)
        return str(manifest)
