import logging

from django.db import DatabaseError
from django.utils import timezone

from longevity_bounds.exceptions import BoundsEngineError
from scenarios.management.base import ScenarioCommand
from scenarios.models import ScenarioRun
from scenarios.outputs import emit_outputs, ensure_output_dir, write_samples
from scenarios.runner import run_scenario

logger = logging.getLogger(__name__)


class Command(ScenarioCommand):
    help = 'Run a scenario end to end: fit, simulate, reorder under every copula and analyze'

    def run_command(self, config, options):
        self.stdout.write(f" Running '{config.name}' with {config.n_sims} simulations (seed {config.seed})...")
        try:
            report = run_scenario(config)
            out_dir = ensure_output_dir(config.output_dir)
            paths = emit_outputs(report, out_dir)
            paths.append(write_samples(out_dir / 'samples.csv', *report.marginals))
        except BoundsEngineError as exc:
            self._record(config, options, status='failed', error_message=str(exc))
            raise

        self._record(
            config, options,
            status='succeeded',
            sample_checksum=report.checksum,
            report=report.summary(),
        )
        for row in report.rows:
            self.stdout.write(f" {row.copula}: median {row.median:.6f}, regime {row.regime}")
        self.report_files(paths)
        self.stdout.write(self.style.SUCCESS(f"Scenario '{config.name}' completed"))

    def _record(self, config, options, **fields):
        """Store the run in the history table; a missing database only costs the history."""
        try:
            ScenarioRun.objects.create(
                name=config.name,
                config_path=str(options['config']),
                seed=str(config.seed),
                n_sims=config.n_sims,
                band=config.band,
                output_dir=str(config.output_dir),
                finished_at=timezone.now(),
                **fields,
            )
        except DatabaseError as exc:
            logger.warning(f"Run history not stored: {exc}")
            self.stdout.write(self.style.WARNING("Run history not stored (is the database migrated?)"))
