"""
Ingestion of external (date, value) index series
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd
from dateutil import parser as date_parser

from tradenet.exceptions import (
    DataValidationError,
    EmptyInputError,
    InputFormatError,
)
from tradenet.schemas import ExternalSeries
from tradenet.services.metrics import log_returns

logger = logging.getLogger(__name__)


def read_series(
    path: str | Path,
    date_column: str = "date",
    value_column: str = "value",
    label: str | None = None,
) -> ExternalSeries:
    """
    Load and validate a dated index series

    Args:
        path: CSV file with a header row
        date_column: Column holding ISO-8601 dates
        value_column: Column holding positive index levels
        label: Series label, defaults to the file stem

    Returns:
        ExternalSeries with normalized ISO dates

    Raises:
        InputFormatError: If the file is unreadable, lacks a column or holds
            an unparseable date or value
        EmptyInputError: If there are no data rows
        DataValidationError: If dates are not strictly increasing or a
            value is not positive; rows are 1-based data rows
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except FileNotFoundError as e:
        raise InputFormatError(str(path), "file not found") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputFormatError(str(path), f"unreadable CSV ({e})") from e
    except pd.errors.EmptyDataError as e:
        raise EmptyInputError(f"{path}: no data") from e

    for column in (date_column, value_column):
        if column not in frame.columns:
            raise InputFormatError(str(path), f"missing column '{column}'", line=1)
    if frame.empty:
        raise EmptyInputError(f"{path}: no data rows")

    dates = []
    values = []
    for index, (raw_date, raw_value) in enumerate(
        zip(frame[date_column], frame[value_column])
    ):
        line = index + 2
        try:
            dates.append(date_parser.isoparse(str(raw_date).strip()))
        except ValueError as e:
            raise InputFormatError(str(path), f"bad date '{raw_date}'", line=line) from e
        try:
            values.append(float(raw_value))
        except (TypeError, ValueError) as e:
            raise InputFormatError(str(path), f"bad value '{raw_value}'", line=line) from e

    value_arr = np.asarray(values)
    nonpositive = (np.flatnonzero(~(value_arr > 0.0)) + 1).tolist()
    if nonpositive:
        raise DataValidationError("Index values must be positive", rows=nonpositive)

    out_of_order = [i + 1 for i in range(1, len(dates)) if dates[i] <= dates[i - 1]]
    if out_of_order:
        raise DataValidationError("Dates must be strictly increasing", rows=out_of_order)

    series = ExternalSeries(
        label=label or path.stem,
        dates=[d.isoformat() for d in dates],
        values=values,
    )
    logger.info(f"Read {len(values)} observations of '{series.label}' from {path}")
    return series


def returns_and_losses(series: ExternalSeries) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Log-returns dated at the later observation, and losses as the
    sign-flipped negative returns

    Returns:
        (DataFrame date,log_return; DataFrame date,loss)
    """
    returns = pd.DataFrame(
        {"date": series.dates[1:], "log_return": log_returns(series.values)}
    )
    negative = returns[returns["log_return"] < 0.0]
    losses = pd.DataFrame(
        {"date": negative["date"].to_numpy(), "loss": -negative["log_return"].to_numpy()}
    )
    return returns, losses
