"""Lower/upper CDF curves of the vacuous and combined location IMs."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np
import pandas as pd

from im_auditor.randomset import (
    CombinedIM,
    IntervalPrior,
    IntervalUnion,
    combined_bounds_mc,
    credible_interval,
    curve_columns,
)

CURVE_COLUMNS = ["theta", "lower_vacuous", "upper_vacuous", "lower_combined", "upper_combined"]
DEFAULT_Y_VALUES = (5.0, 6.5, 7.5, 9.0)
DEFAULT_SPAN = 4.0
DEFAULT_POINTS = 81
CURVE_FLOAT_FORMAT = "%.12g"


class CurveFormatError(ValueError):
    pass


def theta_grid(theta_min: float, theta_max: float, points: int) -> np.ndarray:
    if points < 1:
        raise ValueError(f"A θ grid needs at least one point, got {points}")
    if points == 1:
        return np.array([float(theta_min)])
    if not theta_max > theta_min:
        raise ValueError(f"θ grid upper end {theta_max} must exceed the lower end {theta_min}")
    return np.linspace(theta_min, theta_max, points)


def build_curve_frame(
    prior: IntervalPrior,
    y: float,
    thetas: Sequence[float],
    *,
    mc: CombinedIM | None = None,
) -> tuple[pd.DataFrame, float | None]:
    """Curve table for one y, plus the largest Monte Carlo standard error when sampled.

    Monte Carlo columns reuse one seed for every θ, so the sampled curves
    stay monotone.
    """
    columns = curve_columns(prior, y, thetas)
    worst_error = None
    if mc is not None:
        lower, upper, errors = [], [], []
        for theta in columns["theta"]:
            bounds = combined_bounds_mc(mc, y, IntervalUnion.half_line(float(theta)))
            lower.append(bounds.lower)
            upper.append(bounds.upper)
            errors.append(bounds.std_error)
        columns["lower_combined"] = np.array(lower)
        columns["upper_combined"] = np.array(upper)
        worst_error = float(max(errors))
    return pd.DataFrame({name: columns[name] for name in CURVE_COLUMNS}), worst_error


def curve_filename(y: float) -> str:
    return f"curve-y{y:g}.csv"


def write_curve_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    frame.to_csv(path, index=False, float_format=CURVE_FLOAT_FORMAT, lineterminator="\n")


def read_curve_csv(path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns) != CURVE_COLUMNS:
        raise CurveFormatError(f"Curve columns must be {','.join(CURVE_COLUMNS)}, got {','.join(map(str, frame.columns))}")
    if frame.isna().any().any():
        raise CurveFormatError("Curve file has missing values.")
    if len(frame) > 1 and not np.all(np.diff(frame["theta"].to_numpy()) > 0):
        raise CurveFormatError("θ must be strictly increasing.")
    values = frame[CURVE_COLUMNS[1:]].to_numpy()
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise CurveFormatError("CDF values must lie in [0, 1].")
    return frame


def interval_summary(prior: IntervalPrior, y: float, level: float) -> dict[str, Any]:
    vacuous = credible_interval(IntervalPrior.vacuous(), y, level)
    combined = credible_interval(prior, y, level)
    return {
        "y": y,
        "level": level,
        "vacuous": {"lower": vacuous[0], "upper": vacuous[1], "length": vacuous[1] - vacuous[0]},
        "combined": {"lower": combined[0], "upper": combined[1], "length": combined[1] - combined[0]},
    }


def max_curve_gap(frame: pd.DataFrame) -> float:
    """Largest pointwise distance between the combined and vacuous curves."""
    lower = np.abs(frame["lower_combined"] - frame["lower_vacuous"]).max()
    upper = np.abs(frame["upper_combined"] - frame["upper_vacuous"]).max()
    return float(max(lower, upper))
