from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(help_text='Scenario name from the configuration file', max_length=100)),
                ('config_path', models.CharField(help_text='Scenario file the run was started from', max_length=500)),
                ('seed', models.CharField(help_text='Master seed of the run', max_length=20)),
                ('n_sims', models.PositiveIntegerField(help_text='Number of simulated index values per population')),
                ('band', models.FloatField(blank=True, help_text='Crossing band override (empty means twice the CDF step)', null=True)),
                ('status', models.CharField(choices=[('running', 'Running'), ('succeeded', 'Succeeded'), ('failed', 'Failed')], default='running', help_text='Current status of the run', max_length=20)),
                ('output_dir', models.CharField(blank=True, help_text='Directory holding the CSV outputs', max_length=500)),
                ('sample_checksum', models.CharField(blank=True, help_text='SHA-256 of the two marginal samples shared by every copula', max_length=64)),
                ('report', models.JSONField(blank=True, default=dict, help_text='Crossings and regimes per copula')),
                ('error_message', models.TextField(blank=True, help_text='Reason the run failed')),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Scenario Run',
                'verbose_name_plural': 'Scenario Runs',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['-created_at'], name='scenarios_created_idx'), models.Index(fields=['status'], name='scenarios_status_idx'), models.Index(fields=['name', 'seed'], name='scenarios_name_seed_idx')],
            },
        ),
    ]
