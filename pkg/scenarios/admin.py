from django.contrib import admin

from .models import ScenarioRun


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    list_display = ['id', 'name', 'seed', 'n_sims', 'status', 'created_at', 'finished_at']
    list_filter = ['status', 'created_at']
    search_fields = ['name', 'config_path', 'sample_checksum']
    readonly_fields = ['created_at', 'finished_at', 'sample_checksum', 'report']
    ordering = ['-created_at']
    date_hierarchy = 'created_at'

    fieldsets = (
        ('Scenario', {
            'fields': ('name', 'config_path', 'output_dir')
        }),
        ('Simulation', {
            'fields': ('seed', 'n_sims', 'band', 'sample_checksum')
        }),
        ('Outcome', {
            'fields': ('status', 'error_message', 'report', 'created_at', 'finished_at')
        }),
    )
