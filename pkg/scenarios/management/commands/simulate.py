from pathlib import Path

from scenarios.management.base import ScenarioCommand
from scenarios.outputs import ensure_output_dir, read_params, write_samples
from scenarios.runner import load_populations, simulate_populations


class Command(ScenarioCommand):
    help = 'Simulate both marginal index samples from a parameter file and write samples.csv'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--params', help='Parameter file written by fit (default: <out>/params.json)')

    def run_command(self, config, options):
        params_path = Path(options['params']) if options.get('params') else config.output_dir / 'params.json'
        params = read_params(params_path)
        tables = load_populations(config)
        s1, s2 = simulate_populations(config, tables, params)
        path = write_samples(ensure_output_dir(config.output_dir) / 'samples.csv', s1, s2)
        self.stdout.write(self.style.SUCCESS(f"{s1.n} index values per population written to {path}"))
