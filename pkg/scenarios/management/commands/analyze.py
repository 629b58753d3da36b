from pathlib import Path

from scenarios.management.base import ScenarioCommand
from scenarios.outputs import emit_outputs, read_samples
from scenarios.runner import analyze_marginals


class Command(ScenarioCommand):
    help = 'Run the crossing and layer analysis on a sample file for every configured copula'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--samples', help='Sample file written by simulate (default: <out>/samples.csv)')

    def sample_path(self, config, options):
        return Path(options['samples']) if options.get('samples') else config.output_dir / 'samples.csv'

    def run_command(self, config, options):
        s1, s2 = read_samples(self.sample_path(config, options))
        report = analyze_marginals(config, s1, s2)
        paths = emit_outputs(report, config.output_dir)

        for row in report.rows:
            self.stdout.write(f" {row.copula}: regime {row.regime}, order {row.order or 'n/a'}")
        self.report_files(paths)
        self.stdout.write(self.style.SUCCESS(f"Analyzed {len(report.rows)} copulas"))
