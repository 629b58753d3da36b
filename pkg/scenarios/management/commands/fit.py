import logging

from scenarios.management.base import ScenarioCommand
from scenarios.outputs import ensure_output_dir, write_params
from scenarios.runner import fit_populations, load_populations

logger = logging.getLogger(__name__)


class Command(ScenarioCommand):
    help = 'Fit the marginal mortality models of a scenario and write params.json'

    def run_command(self, config, options):
        tables = load_populations(config)
        params = fit_populations(config, tables)
        path = write_params(ensure_output_dir(config.output_dir) / 'params.json', params)

        for population, fitted in zip(config.populations, params):
            self.stdout.write(f" {population.population_id}: {fitted.kind} fitted on {len(fitted.years)} years")
        self.stdout.write(self.style.SUCCESS(f"Parameters written to {path}"))
