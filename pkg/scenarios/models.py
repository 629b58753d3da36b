from django.db import models


class ScenarioRun(models.Model):
    """
    One invocation of the ``run`` command. The CSV outputs stay on disk;
    this row keeps the settings used and a digest of the report.
    """

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('succeeded', 'Succeeded'),
        ('failed', 'Failed'),
    ]

    name = models.CharField(max_length=100, help_text="Scenario name from the configuration file")
    config_path = models.CharField(max_length=500, help_text="Scenario file the run was started from")

    # Seeds are unsigned 64-bit integers, too large for a signed BigIntegerField
    seed = models.CharField(max_length=20, help_text="Master seed of the run")
    n_sims = models.PositiveIntegerField(help_text="Number of simulated index values per population")
    band = models.FloatField(
        blank=True,
        null=True,
        help_text="Crossing band override (empty means twice the CDF step)"
    )

    status = models.CharField(
        max_length=20,
        choices=STATUS_CHOICES,
        default='running',
        help_text="Current status of the run"
    )
    output_dir = models.CharField(max_length=500, blank=True, help_text="Directory holding the CSV outputs")
    sample_checksum = models.CharField(
        max_length=64,
        blank=True,
        help_text="SHA-256 of the two marginal samples shared by every copula"
    )
    report = models.JSONField(default=dict, blank=True, help_text="Crossings and regimes per copula")
    error_message = models.TextField(blank=True, help_text="Reason the run failed")

    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(blank=True, null=True)

    class Meta:
        verbose_name = "Scenario Run"
        verbose_name_plural = "Scenario Runs"
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['-created_at'], name='scenarios_created_idx'),
            models.Index(fields=['status'], name='scenarios_status_idx'),
            models.Index(fields=['name', 'seed'], name='scenarios_name_seed_idx'),
        ]

    def __str__(self):
        return f"{self.name} (seed {self.seed}, {self.get_status_display()})"

    @property
    def is_finished(self):
        return self.status != 'running'

    @property
    def duration(self):
        if self.finished_at:
            return self.finished_at - self.created_at
        return None

    @property
    def n_copulas(self):
        return len(self.report.get('rows', []))
