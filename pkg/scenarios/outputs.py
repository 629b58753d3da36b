"""
File outputs of a scenario: the report, CDF grids, the payoff sweep and
the spread bars, plus the intermediate parameter and sample files passed
between the ``fit``, ``simulate`` and ``analyze`` commands.
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings

from distributions.empirical import Sample, ecdf_eval
from longevity_bounds.exceptions import InvalidInputError
from mortality.params import params_to_dict
from .runner import REPORT_QUANTILES
from .serializers import ParamsFileSerializer

logger = logging.getLogger(__name__)

REPORT_FLOAT_FORMAT = '%.10g'
SAMPLE_FLOAT_FORMAT = '%.17g'
SAMPLE_COLUMNS = ('population1', 'population2')


def _quantile_name(prefix, p):
    return f"{prefix}_q{int(round(p * 100)):02d}"


def report_frame(report):
    summary = report.summary()
    records = []
    for row in report.rows:
        record = {'copula': row.copula}
        for p, value in zip(REPORT_QUANTILES, row.quantiles):
            record[_quantile_name('i', p)] = value
        record.update({
            'median_ic': summary['median_c'],
            'median_icm': summary['median_cm'],
            'd_c': row.d_c,
            'd_cm': row.d_cm,
            'd_star': row.d_star,
            'crossings_c': row.crossings_c,
            'crossings_cm': row.crossings_cm,
            'order': row.order,
            'regime': row.regime,
            'e_r_i': row.e_payoff,
            'e_r_ic': row.e_payoff_c,
            'e_r_icm': row.e_payoff_cm,
            'spread': row.spread,
            'spread_pct_of_max': row.spread_pct_of_max,
            'note': row.note,
        })
        records.append(record)
    return pd.DataFrame.from_records(records)


def cdf_frame(sample, sample_c, sample_cm, points=None):
    """F_I, F_Ic and F_Icm on an even grid over the joint support"""
    if points is None:
        points = getattr(settings, 'BOUNDS_CDF_GRID_POINTS', 501)
    lower = min(sample.lower, sample_c.lower, sample_cm.lower)
    upper = max(sample.upper, sample_c.upper, sample_cm.upper)
    grid = np.linspace(lower, upper, int(points))
    return pd.DataFrame({
        'x': grid,
        'f_i': ecdf_eval(sample, grid),
        'f_ic': ecdf_eval(sample_c, grid),
        'f_icm': ecdf_eval(sample_cm, grid),
    })


def _write_csv(frame, path, float_format=REPORT_FLOAT_FORMAT):
    try:
        frame.to_csv(path, index=False, float_format=float_format, lineterminator='\n')
    except OSError as exc:
        raise InvalidInputError(f"Cannot write {path}: {exc}") from exc
    return path


def ensure_output_dir(out_dir):
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"Cannot create output directory {out_dir}: {exc}") from exc
    return out_dir


def emit_sweep(report, out_dir):
    out_dir = ensure_output_dir(out_dir)
    return [
        _write_csv(pd.DataFrame.from_records(report.sweep), out_dir / 'payoff_sweep.csv'),
        _write_csv(pd.DataFrame.from_records(report.spread_bars), out_dir / 'spread_bars.csv'),
    ]


def emit_outputs(report, out_dir):
    """Write report.csv, one cdf_<copula>.csv per copula, payoff_sweep.csv and spread_bars.csv."""
    out_dir = ensure_output_dir(out_dir)
    written = [_write_csv(report_frame(report), out_dir / 'report.csv')]
    for label, sample in report.differences.items():
        frame = cdf_frame(sample, report.sample_c, report.sample_cm)
        written.append(_write_csv(frame, out_dir / f"cdf_{label}.csv"))
    written += emit_sweep(report, out_dir)
    logger.info(f"Wrote {len(written)} files to {out_dir}")
    return written


def write_samples(path, s1, s2):
    frame = pd.DataFrame({SAMPLE_COLUMNS[0]: s1.values, SAMPLE_COLUMNS[1]: s2.values})
    return _write_csv(frame, Path(path), float_format=SAMPLE_FLOAT_FORMAT)


def read_samples(path):
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Sample file {path} does not exist")
    frame = pd.read_csv(path, dtype=float)
    missing = [column for column in SAMPLE_COLUMNS if column not in frame.columns]
    if missing:
        raise InvalidInputError(f"{path}: missing column(s) {', '.join(missing)}")
    return tuple(Sample(frame[column].to_numpy()) for column in SAMPLE_COLUMNS)


def write_params(path, params):
    """Store one fitted model per population as a JSON list."""
    path = Path(path)
    try:
        path.write_text(json.dumps([params_to_dict(p) for p in params], indent=2) + '\n', encoding='utf-8')
    except OSError as exc:
        raise InvalidInputError(f"Cannot write {path}: {exc}") from exc
    return path


def read_params(path):
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Parameter file {path} does not exist")
    try:
        entries = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(entries, list) or len(entries) != 2:
        raise InvalidInputError(f"{path}: expected a list with one model per population")

    params = []
    for entry in entries:
        serializer = ParamsFileSerializer(data=entry)
        if not serializer.is_valid():
            raise InvalidInputError(f"{path}: {serializer.errors}")
        params.append(serializer.validated_data['params'])
    return tuple(params)
