from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from copulas.rng import SEED_LIMIT, Seed
from copulas.sampling import CopulaSpec
from layers.payoffs import LayerSpec
from longevity_bounds.exceptions import InvalidInputError
from mortality.params import ModelKind, TWO_POPULATION_KINDS, params_from_dict
from mortality.tables import IndexDefinition
from .models import ScenarioRun
from .runner import DEFAULT_COPULAS, PopulationConfig, ScenarioConfig


class CopulaListField(serializers.Field):
    """Comma-separated copulas such as ``independence, gaussian:0.5, clayton:2``"""

    def to_internal_value(self, data):
        items = data.split(',') if isinstance(data, str) else list(data)
        items = [str(item).strip() for item in items if str(item).strip()]
        if not items:
            raise serializers.ValidationError("At least one copula is required.")
        specs = []
        for item in items:
            try:
                spec = CopulaSpec.parse(item)
            except InvalidInputError as exc:
                raise serializers.ValidationError(str(exc))
            if spec in specs:
                raise serializers.ValidationError(f"Copula '{spec.label}' is listed twice.")
            specs.append(spec)
        return tuple(specs)

    def to_representation(self, value):
        return [spec.label for spec in value]


def _setting(name):
    return getattr(settings, f"BOUNDS_{name.upper()}")


class ScenarioConfigSerializer(serializers.Serializer):
    """
    Validates the flat scenario file. Relative paths resolve against
    ``context['base_dir']`` (the directory of the scenario file).
    """
    name = serializers.CharField(max_length=100)

    population1_id = serializers.CharField(max_length=50, required=False)
    population1_data = serializers.CharField()
    population1_model = serializers.ChoiceField(choices=ModelKind.choices)
    population1_alpha = serializers.IntegerField(min_value=0)
    population1_omega = serializers.IntegerField(min_value=0)

    population2_id = serializers.CharField(max_length=50, required=False)
    population2_data = serializers.CharField()
    population2_model = serializers.ChoiceField(choices=ModelKind.choices)
    population2_alpha = serializers.IntegerField(min_value=0)
    population2_omega = serializers.IntegerField(min_value=0)

    horizon = serializers.IntegerField(min_value=1)
    base_year = serializers.IntegerField()
    copulas = CopulaListField(required=False)

    delta = serializers.FloatField()
    epsilon = serializers.FloatField()
    principal = serializers.FloatField(required=False, allow_null=True)

    n_sims = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, max_value=SEED_LIMIT - 1, required=False)
    band = serializers.FloatField(min_value=0, required=False, allow_null=True)
    order_band = serializers.FloatField(min_value=0, required=False)
    output_dir = serializers.CharField(required=False)

    fit_start_year = serializers.IntegerField(required=False)
    fit_end_year = serializers.IntegerField(required=False)
    fit_min_age = serializers.IntegerField(min_value=0, required=False)
    fit_max_age = serializers.IntegerField(min_value=0, required=False)

    sweep_min = serializers.FloatField(required=False)
    sweep_max = serializers.FloatField(required=False)
    sweep_step = serializers.FloatField(required=False)
    sweep_width = serializers.FloatField(required=False)
    spread_quantile = serializers.FloatField(required=False)

    def _resolve(self, value):
        path = Path(value).expanduser()
        if not path.is_absolute():
            path = Path(self.context.get('base_dir', Path.cwd())) / path
        return path

    def validate_population1_data(self, value):
        return self._existing_file(value)

    def validate_population2_data(self, value):
        return self._existing_file(value)

    def _existing_file(self, value):
        path = self._resolve(value)
        if not path.is_file():
            raise serializers.ValidationError(f"File {path} does not exist.")
        return path

    def validate_output_dir(self, value):
        return self._resolve(value)

    def validate_seed(self, value):
        try:
            Seed(value)
        except InvalidInputError as exc:
            raise serializers.ValidationError(str(exc))
        return value

    def validate_sweep_step(self, value):
        if value <= 0:
            raise serializers.ValidationError("Sweep step must be positive.")
        return value

    def validate_sweep_width(self, value):
        if value <= 0:
            raise serializers.ValidationError("Sweep width must be positive.")
        return value

    def validate_spread_quantile(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("Spread quantile must lie strictly between 0 and 1.")
        return value

    def validate(self, attrs):
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError(f"Unknown setting(s): {', '.join(unknown)}")

        for name in ('n_sims', 'seed', 'order_band', 'fit_start_year', 'fit_end_year', 'fit_min_age',
                     'fit_max_age', 'sweep_min', 'sweep_max', 'sweep_step', 'sweep_width', 'spread_quantile'):
            attrs.setdefault(name, _setting(name))
        attrs.setdefault('output_dir', Path(settings.BOUNDS_OUTPUT_DIR))
        attrs.setdefault('copulas', CopulaListField().to_internal_value(','.join(DEFAULT_COPULAS)))
        attrs.setdefault('band', None)
        attrs.setdefault('principal', None)

        try:
            attrs['layer'] = LayerSpec(attrs['delta'], attrs['epsilon'], attrs['principal'])
        except InvalidInputError as exc:
            raise serializers.ValidationError({'epsilon': str(exc)})

        if attrs['fit_start_year'] >= attrs['fit_end_year']:
            raise serializers.ValidationError({'fit_end_year': "Fitting window must span at least two years."})
        if attrs['fit_min_age'] >= attrs['fit_max_age']:
            raise serializers.ValidationError({'fit_max_age': "Fitting ages must span at least two ages."})
        if not attrs['sweep_min'] < attrs['sweep_max']:
            raise serializers.ValidationError({'sweep_max': "Sweep range is empty."})
        if not attrs['fit_start_year'] <= attrs['base_year'] <= attrs['fit_end_year']:
            raise serializers.ValidationError({'base_year': "Base year must lie inside the fitting window."})

        for k in (1, 2):
            prefix = f"population{k}"
            try:
                attrs[f"{prefix}_index"] = IndexDefinition(
                    attrs[f"{prefix}_alpha"], attrs[f"{prefix}_omega"], attrs['horizon'], attrs['base_year'],
                )
            except InvalidInputError as exc:
                raise serializers.ValidationError({f"{prefix}_omega": str(exc)})
            if attrs[f"{prefix}_alpha"] < attrs['fit_min_age'] or attrs[f"{prefix}_omega"] > attrs['fit_max_age']:
                raise serializers.ValidationError(
                    {f"{prefix}_alpha": "Index ages must lie inside the fitting ages."}
                )
            attrs.setdefault(f"{prefix}_id", attrs[f"{prefix}_data"].stem)

        if attrs['population1_id'] == attrs['population2_id']:
            raise serializers.ValidationError({'population2_id': "The two populations need different ids."})
        kinds = {attrs['population1_model'], attrs['population2_model']}
        if kinds & set(TWO_POPULATION_KINDS) and len(kinds) > 1:
            raise serializers.ValidationError(
                {'population2_model': "Two-population models must be used for both populations."}
            )
        return attrs

    def create(self, validated_data):
        populations = tuple(
            PopulationConfig(
                population_id=validated_data[f"population{k}_id"],
                data_path=validated_data[f"population{k}_data"],
                model=validated_data[f"population{k}_model"],
                index=validated_data[f"population{k}_index"],
            )
            for k in (1, 2)
        )
        return ScenarioConfig(
            name=validated_data['name'],
            populations=populations,
            copulas=validated_data['copulas'],
            layer=validated_data['layer'],
            n_sims=validated_data['n_sims'],
            seed=validated_data['seed'],
            output_dir=Path(validated_data['output_dir']),
            fit_years=(validated_data['fit_start_year'], validated_data['fit_end_year']),
            fit_ages=(validated_data['fit_min_age'], validated_data['fit_max_age']),
            sweep_min=validated_data['sweep_min'],
            sweep_max=validated_data['sweep_max'],
            sweep_step=validated_data['sweep_step'],
            sweep_width=validated_data['sweep_width'],
            spread_quantile=validated_data['spread_quantile'],
            order_band=validated_data['order_band'],
            band=validated_data['band'],
            sweep_principal=validated_data['principal'],
        )


class ParamsFileSerializer(serializers.Serializer):
    """One fitted model as written by the ``fit`` command"""
    model = serializers.ChoiceField(choices=ModelKind.choices)

    def validate(self, attrs):
        try:
            attrs['params'] = params_from_dict(self.initial_data)
        except InvalidInputError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class ScenarioRunSerializer(serializers.ModelSerializer):
    status_display = serializers.CharField(source='get_status_display', read_only=True)
    n_copulas = serializers.IntegerField(read_only=True)

    class Meta:
        model = ScenarioRun
        fields = [
            'id',
            'name',
            'config_path',
            'seed',
            'n_sims',
            'band',
            'status',
            'status_display',
            'output_dir',
            'sample_checksum',
            'report',
            'error_message',
            'n_copulas',
            'created_at',
            'finished_at',
        ]
        read_only_fields = fields
