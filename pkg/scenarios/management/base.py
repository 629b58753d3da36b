import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from longevity_bounds.exceptions import InvalidInputError, NumericalFailure
from scenarios.loaders import read_config_file
from scenarios.serializers import ScenarioConfigSerializer

logger = logging.getLogger(__name__)

# CLI flag -> scenario file key
OVERRIDES = {
    'seed': 'seed',
    'sims': 'n_sims',
    'band': 'band',
    'out': 'output_dir',
}


class ScenarioCommand(BaseCommand):
    """
    Shared options and exit codes of the scenario commands.

    Invalid input exits with status 2, numerical failures with status 3.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Scenario file (key = value lines)')
        parser.add_argument('--seed', type=int, help='Master seed (overrides the scenario file)')
        parser.add_argument('--sims', type=int, help='Number of simulations (overrides the scenario file)')
        parser.add_argument('--band', type=float, help='Crossing band (default: twice the CDF step)')
        parser.add_argument('--out', help='Output directory (overrides the scenario file)')

    def handle(self, *args, **options):
        try:
            config = self.load_config(options)
            return self.run_command(config, options)
        except serializers.ValidationError as exc:
            raise CommandError(f"Invalid scenario: {exc.detail}", returncode=2) from exc
        except InvalidInputError as exc:
            raise CommandError(str(exc), returncode=2) from exc
        except NumericalFailure as exc:
            raise CommandError(str(exc), returncode=3) from exc

    def load_config(self, options):
        path = Path(options['config']).resolve()
        data = read_config_file(path)
        for flag, key in OVERRIDES.items():
            if options.get(flag) is not None:
                value = options[flag]
                data[key] = str(Path(value).resolve()) if flag == 'out' else value

        serializer = ScenarioConfigSerializer(data=data, context={'base_dir': path.parent})
        serializer.is_valid(raise_exception=True)
        config = serializer.save()
        logger.debug(f"Loaded scenario '{config.name}' from {path}")
        return config

    def run_command(self, config, options):
        raise NotImplementedError('subclasses of ScenarioCommand must provide a run_command() method')

    def report_files(self, paths):
        for path in paths:
            self.stdout.write(f"  {path}")
