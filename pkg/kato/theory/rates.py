from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from kato.util.exceptions import DegenerateFitError
from kato.util.log import LOG


@dataclass(frozen=True)
class RateFit:
    """
    Least-squares power law value = exp(intercept) * nu^slope.

    Attributes:
        slope (float): Fitted exponent.
        intercept (float): Fitted log prefactor.
        max_residual (float): Largest absolute residual in log space.
    """

    slope: float
    intercept: float
    max_residual: float

    def dictify(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "max_residual": self.max_residual}


def fit_rate(points: Iterable[tuple[float, float]]) -> RateFit:
    """
    Fit a line to (log nu, log value).

    Raises:
        ValueError: If fewer than three points are given or the nu values repeat.
        DegenerateFitError: If a value is not strictly positive; the message names its nu.
    """
    points = list(points)
    if len(points) < 3:
        raise ValueError(f"rate fit needs at least 3 points, got {len(points)}")
    nus = np.array([float(nu) for nu, _ in points])
    values = np.array([float(value) for _, value in points])
    if np.unique(nus).size != nus.size:
        raise ValueError("rate fit needs distinct nu values")
    if np.any(nus <= 0):
        raise ValueError("rate fit needs positive nu values")
    for nu, value in zip(nus, values):
        if not value > 0:
            raise DegenerateFitError(f"value {value:g} at nu={nu:g} is not positive")

    log_nu = np.log(nus)
    log_value = np.log(values)
    slope, intercept = np.polyfit(log_nu, log_value, 1)
    residual = log_value - (slope * log_nu + intercept)
    return RateFit(float(slope), float(intercept), float(np.max(np.abs(residual))))


def fit_series(nus: Iterable[float], values: Iterable[float]) -> RateFit | None:
    """
    fit_rate over paired sequences, or None when the series cannot be fitted.

    A series that is zero throughout, or that has a non-positive value, gives None.
    """
    points = list(zip(nus, values))
    if all(value == 0 for _, value in points):
        return None
    try:
        return fit_rate(points)
    except DegenerateFitError as err:
        LOG.warning("Rate fit rejected: %s", err)
        return None
