"""
Readers for the two input files of a scenario: deaths/exposure CSVs and the
flat ``key = value`` configuration file.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from longevity_bounds.exceptions import InvalidInputError
from mortality.tables import MortalityTable

logger = logging.getLogger(__name__)

MORTALITY_COLUMNS = ('year', 'age', 'deaths', 'exposure')

# header is line 1
_FIRST_DATA_LINE = 2


def _numeric_column(frame, column, path):
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors='coerce')
    bad = values.isna() | ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise InvalidInputError(
            f"{path}, line {row + _FIRST_DATA_LINE}: {column} {raw.iloc[row]!r} is not a finite number"
        )
    return values.to_numpy(dtype=float)


def _first_line(mask):
    return int(np.flatnonzero(mask)[0]) + _FIRST_DATA_LINE


def load_mortality_csv(path, population_id=None):
    """
    Load one population from a ``year,age,deaths,exposure`` CSV file.

    Every cell of the year x age grid must appear exactly once. The
    population id defaults to the file name without its extension.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Mortality file {path} does not exist")
    population_id = population_id or path.stem

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"{path}: cannot be read as CSV ({exc})") from exc

    frame.columns = [str(column).strip() for column in frame.columns]
    missing = [column for column in MORTALITY_COLUMNS if column not in frame.columns]
    if missing:
        raise InvalidInputError(f"{path}: missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise InvalidInputError(f"{path}: no data rows")

    columns = {column: _numeric_column(frame, column, path) for column in MORTALITY_COLUMNS}
    for column in ('year', 'age'):
        fractional = columns[column] != np.round(columns[column])
        if fractional.any():
            raise InvalidInputError(f"{path}, line {_first_line(fractional)}: {column} must be an integer")
    if (columns['deaths'] < 0).any():
        raise InvalidInputError(f"{path}, line {_first_line(columns['deaths'] < 0)}: negative deaths")
    if (columns['exposure'] <= 0).any():
        raise InvalidInputError(
            f"{path}, line {_first_line(columns['exposure'] <= 0)}: exposure must be positive"
        )

    parsed = pd.DataFrame(columns)
    parsed['year'] = parsed['year'].astype(int)
    parsed['age'] = parsed['age'].astype(int)
    duplicated = parsed.duplicated(['year', 'age']).to_numpy()
    if duplicated.any():
        line = _first_line(duplicated)
        raise InvalidInputError(
            f"{path}, line {line}: year {parsed['year'].iloc[line - _FIRST_DATA_LINE]}, "
            f"age {parsed['age'].iloc[line - _FIRST_DATA_LINE]} appears twice"
        )

    table = MortalityTable.from_frame(parsed, population_id)
    logger.info(
        f"Loaded {len(parsed)} rows from {path}: {table.years.size} years x {table.ages.size} ages "
        f"for {population_id}"
    )
    return table


def read_config_file(path):
    """Parse a flat ``key = value`` file; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"Scenario file {path} does not exist")

    values = {}
    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith('#'):
            continue
        key, sep, value = text.partition('=')
        key = key.strip()
        if not sep or not key:
            raise InvalidInputError(f"{path}, line {number}: expected 'key = value', got {text!r}")
        if key in values:
            raise InvalidInputError(f"{path}, line {number}: key '{key}' is set twice")
        values[key] = value.strip()
    logger.debug(f"Read {len(values)} settings from {path}")
    return values
