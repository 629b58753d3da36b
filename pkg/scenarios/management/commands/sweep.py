from scenarios.management.commands.analyze import Command as AnalyzeCommand
from scenarios.outputs import emit_sweep, read_samples
from scenarios.runner import analyze_marginals


class Command(AnalyzeCommand):
    help = 'Write the expected-payoff sweep and the spread bars for a sample file'

    def run_command(self, config, options):
        s1, s2 = read_samples(self.sample_path(config, options))
        report = analyze_marginals(config, s1, s2)
        paths = emit_sweep(report, config.output_dir)
        self.report_files(paths)
        self.stdout.write(self.style.SUCCESS(
            f"Swept {len(report.sweep)} attachment points from {config.sweep_min:g} to {config.sweep_max:g}"
        ))
