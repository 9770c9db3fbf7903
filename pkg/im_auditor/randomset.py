"""Random-set inferential models.

Two engines live here. The continuous one handles the normal location model
``Y = θ + U`` with the vacuous-prior random interval ``[y - |U*|, y + |U*|]``,
combined by Dempster's rule with a nested prior over finitely many
intervals. It comes with a Monte Carlo estimator and a closed form. The
finite one builds consonant random sets on finite frames and tabulates the
combined IM for the auditors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.special import ndtr

from im_auditor.belief import (
    MASS_TOLERANCE,
    CompleteConflictError,
    Frame,
    MassFunction,
    MassFunctionError,
    Number,
    dempster_combine,
)
from im_auditor.credal import CredalModel, Likelihood
from im_auditor.imtable import IMTable
from im_auditor.streams import DEFAULT_CHUNK_SIZE, DEFAULT_SEED, map_chunks

BISECTION_XTOL = 1e-8
CONTOUR_TIE_TOLERANCE = 1e-12
BRACKET_PADDING = 40.0


class ConflictError(CompleteConflictError):
    pass


class FocalShapeError(ValueError):
    pass


def _radius_probability(r):
    """P(|U*| <= r) for standard normal U*; 0 for r <= 0."""
    r = np.asarray(r, dtype=float)
    return np.where(r > 0.0, 2.0 * ndtr(np.maximum(r, 0.0)) - 1.0, 0.0)


@dataclass(frozen=True)
class LocationModel:
    """Association ``Y = θ + U`` with standard normal U."""

    def sample(self, theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
        return theta + rng.standard_normal(size)


@dataclass(frozen=True)
class RandomIntervalIM:
    model: LocationModel = LocationModel()

    def realize(self, y: float, u_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        radius = np.abs(np.asarray(u_star, dtype=float))
        return y - radius, y + radius


def vacuous_lower_cdf(y: float, theta: float) -> float:
    return float(_radius_probability(theta - y))


def vacuous_upper_cdf(y: float, theta: float) -> float:
    return float(1.0 - _radius_probability(y - theta))


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed intervals, stored as sorted, merged components."""

    components: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for lo, hi in self.components:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"Invalid interval [{lo}, {hi}]")
            cleaned.append((lo, hi))
        merged: list[tuple[float, float]] = []
        for lo, hi in sorted(cleaned):
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "components", tuple(merged))

    @classmethod
    def half_line(cls, theta: float) -> "IntervalUnion":
        return cls(((-math.inf, theta),))

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def between(cls, lo: float, hi: float) -> "IntervalUnion":
        return cls(((lo, hi),))

    def contains(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        result = np.zeros(np.broadcast(lo, hi).shape, dtype=bool)
        for c_lo, c_hi in self.components:
            result |= (c_lo <= lo) & (hi <= c_hi)
        return result

    def intersects(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        result = np.zeros(np.broadcast(lo, hi).shape, dtype=bool)
        for c_lo, c_hi in self.components:
            result |= (c_lo <= hi) & (lo <= c_hi)
        return result

    def intersect(self, lo: float, hi: float) -> "IntervalUnion":
        parts = [(max(c_lo, lo), min(c_hi, hi)) for c_lo, c_hi in self.components]
        return IntervalUnion(tuple(part for part in parts if part[0] <= part[1]))

    def is_empty(self) -> bool:
        return not self.components


@dataclass(frozen=True)
class IntervalPrior:
    """Nested prior random set over finitely many closed intervals, innermost first."""

    focal: tuple[tuple[float, float, Number], ...]

    def __post_init__(self) -> None:
        if not self.focal:
            raise FocalShapeError("An interval prior needs at least one focal interval.")
        entries = []
        total: Number = 0
        for lo, hi, mass in self.focal:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or lo > hi or lo == math.inf or hi == -math.inf:
                raise FocalShapeError(f"Focal interval [{lo}, {hi}] is empty or malformed.")
            if not mass > 0:
                raise MassFunctionError(f"Focal interval [{lo}, {hi}] has non-positive mass {mass}.")
            entries.append((lo, hi, mass))
            total += mass
        if abs(total - 1) > MASS_TOLERANCE:
            raise MassFunctionError(f"Interval prior masses sum to {float(total):.15g}, expected 1.")
        entries.sort(key=lambda item: (-item[0], item[1]))
        for (inner_lo, inner_hi, _), (outer_lo, outer_hi, _) in zip(entries, entries[1:]):
            if (inner_lo, inner_hi) == (outer_lo, outer_hi):
                raise FocalShapeError(f"Duplicate focal interval [{inner_lo}, {inner_hi}].")
            if not (outer_lo <= inner_lo and inner_hi <= outer_hi):
                raise FocalShapeError(
                    f"Focal intervals [{inner_lo}, {inner_hi}] and [{outer_lo}, {outer_hi}] are not nested."
                )
        object.__setattr__(self, "focal", tuple(entries))

    @classmethod
    def vacuous(cls) -> "IntervalPrior":
        return cls(((-math.inf, math.inf, 1.0),))

    @classmethod
    def half_line(cls, cut: float, mass: Number) -> "IntervalPrior":
        """``mass`` on (-inf, cut], the rest on the real line."""
        return cls(((-math.inf, cut, mass), (-math.inf, math.inf, 1 - mass)))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([lo for lo, _, _ in self.focal]),
            np.array([hi for _, hi, _ in self.focal]),
        )

    @property
    def masses(self) -> np.ndarray:
        return np.array([float(mass) for _, _, mass in self.focal])

    def plausibility(self, hypothesis: IntervalUnion) -> float:
        lo, hi = self.bounds
        return float(self.masses[hypothesis.intersects(lo, hi)].sum())

    def belief(self, hypothesis: IntervalUnion) -> float:
        lo, hi = self.bounds
        return float(self.masses[hypothesis.contains(lo, hi)].sum())

    def finite_points(self) -> list[float]:
        return [value for lo, hi, _ in self.focal for value in (lo, hi) if math.isfinite(value)]


@dataclass(frozen=True)
class CombinedIM:
    prior: IntervalPrior
    samples: int = 100_000
    seed: int = DEFAULT_SEED
    workers: int = 1
    base: RandomIntervalIM = RandomIntervalIM()

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"Monte Carlo sample count must be at least 1, got {self.samples}")
        if self.workers < 1:
            raise ValueError(f"Worker count must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class MonteCarloBounds:
    lower: float
    upper: float
    std_error: float
    lower_std_error: float
    upper_std_error: float
    denominator: float
    samples: int


def _ratio_std_error(numerator: int, denominator: int, samples: int) -> float:
    # numerator indicators imply denominator indicators, so N^2 = N, N*D = N and D^2 = D
    ratio = numerator / denominator
    spread = (numerator * (1.0 - 2.0 * ratio) + ratio * ratio * denominator) / samples
    return math.sqrt(max(spread, 0.0) / samples) / (denominator / samples)


def combined_bounds_mc(im: CombinedIM, y: float, hypothesis: IntervalUnion) -> MonteCarloBounds:
    focal_lo, focal_hi = im.prior.bounds
    masses = im.prior.masses / im.prior.masses.sum()

    def count(rng: np.random.Generator, size: int, index: int) -> tuple[int, int, int]:
        lo, hi = im.base.realize(y, rng.standard_normal(size))
        picks = rng.choice(len(masses), size=size, p=masses)
        lo = np.maximum(lo, focal_lo[picks])
        hi = np.minimum(hi, focal_hi[picks])
        hit = lo <= hi
        inside = hit & hypothesis.contains(lo, hi)
        touching = hit & hypothesis.intersects(lo, hi)
        return int(hit.sum()), int(inside.sum()), int(touching.sum())

    counts = map_chunks(count, im.samples, seed=im.seed, chunk_size=DEFAULT_CHUNK_SIZE, workers=im.workers)
    hits = sum(item[0] for item in counts)
    inside = sum(item[1] for item in counts)
    touching = sum(item[2] for item in counts)
    if hits == 0:
        raise ConflictError(f"complete conflict at this y ({y:g}): every sampled interval missed the prior")
    lower_se = _ratio_std_error(inside, hits, im.samples)
    upper_se = _ratio_std_error(touching, hits, im.samples)
    return MonteCarloBounds(
        lower=inside / hits,
        upper=touching / hits,
        std_error=max(lower_se, upper_se),
        lower_std_error=lower_se,
        upper_std_error=upper_se,
        denominator=hits / im.samples,
        samples=im.samples,
    )


def combined_cdf_arrays(prior: IntervalPrior, y: float, thetas: np.ndarray) -> dict[str, np.ndarray]:
    """Closed-form lower and upper CDFs of the combined IM over a θ array.

    For a focal interval [a, b], the random interval meets it iff
    ``|U*| >= max(y - b, a - y)``; the intersection lies in (-inf, θ] iff it
    is non-empty and ``min(y + |U*|, b) <= θ``.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    focal_lo, focal_hi = prior.bounds
    masses = prior.masses
    reach = np.maximum(y - focal_hi, focal_lo - y)
    hit = 1.0 - _radius_probability(reach)
    denominator = float(masses @ hit)
    if denominator <= 0.0:
        raise ConflictError(f"complete conflict at this y ({y:g})")

    lo = focal_lo[:, None]
    hi = focal_hi[:, None]
    theta = thetas[None, :]
    capped = np.minimum(hi, theta)
    upper_terms = np.where(
        lo <= capped,
        1.0 - _radius_probability(np.maximum(y - capped, lo - y)),
        0.0,
    )
    lower_terms = np.where(
        hi <= theta,
        hit[:, None],
        np.maximum(0.0, _radius_probability(theta - y) - _radius_probability(reach)[:, None]),
    )
    return {
        "denominator": np.array(denominator),
        "hit": hit,
        "lower_terms": lower_terms,
        "upper_terms": upper_terms,
        "lower": np.clip(masses @ lower_terms / denominator, 0.0, 1.0),
        "upper": np.clip(masses @ upper_terms / denominator, 0.0, 1.0),
    }


def combined_cdf_analytic(prior: IntervalPrior, y: float, theta: float) -> tuple[float, float]:
    pieces = combined_cdf_arrays(prior, y, np.array([theta]))
    return float(pieces["lower"][0]), float(pieces["upper"][0])


def combined_cdf_terms(prior: IntervalPrior, y: float, theta: float) -> dict[str, Any]:
    pieces = combined_cdf_arrays(prior, y, np.array([theta]))
    return {
        "y": y,
        "theta": theta,
        "denominator": float(pieces["denominator"]),
        "focal": [
            {
                "lower_bound": lo,
                "upper_bound": hi,
                "mass": float(mass),
                "hit_probability": float(pieces["hit"][index]),
                "lower_term": float(pieces["lower_terms"][index, 0]),
                "upper_term": float(pieces["upper_terms"][index, 0]),
            }
            for index, (lo, hi, mass) in enumerate(prior.focal)
        ],
        "lower": float(pieces["lower"][0]),
        "upper": float(pieces["upper"][0]),
    }


def _first_crossing(cdf, target: float, left: float, right: float) -> float:
    """inf{θ : cdf(θ) >= target} for a non-decreasing cdf."""
    return float(bisect(lambda theta: 1.0 if cdf(theta) >= target else -1.0, left, right, xtol=BISECTION_XTOL))


def credible_interval(im: CombinedIM | IntervalPrior, y: float, level: float) -> tuple[float, float]:
    if not 0.0 < level < 1.0:
        raise ValueError(f"Level must lie strictly between 0 and 1, got {level}")
    prior = im.prior if isinstance(im, CombinedIM) else im
    tail = (1.0 - level) / 2.0
    anchors = [y, *prior.finite_points()]
    left = min(anchors) - BRACKET_PADDING
    right = max(anchors) + BRACKET_PADDING
    lo = _first_crossing(lambda theta: combined_cdf_analytic(prior, y, theta)[1], tail, left, right)
    hi = _first_crossing(lambda theta: combined_cdf_analytic(prior, y, theta)[0], 1.0 - tail, left, right)
    return lo, hi


def plausibility_contour(likelihood: Likelihood) -> np.ndarray:
    """``contour[y, θ]`` is the probability under θ of data no more likely than y."""
    table = likelihood.table
    no_more_likely = table[None, :, :] <= table[:, None, :] + CONTOUR_TIE_TOLERANCE
    return np.minimum((no_more_likely * table[None, :, :]).sum(axis=1), 1.0)


def nested_random_set(likelihood: Likelihood, y: str) -> MassFunction:
    contour = plausibility_contour(likelihood)[likelihood.data_frame.index(y)]
    anchor = 1 << int(np.argmax(contour))
    pairs = []
    previous = 0.0
    for level in np.unique(contour[contour > 0.0]):
        members = np.flatnonzero(contour >= level)
        mask = anchor
        for index in members:
            mask |= 1 << int(index)
        pairs.append((mask, float(level) - previous))
        previous = float(level)
    if previous < 1.0:
        pairs.append((anchor, 1.0 - previous))
    return MassFunction.from_pairs(likelihood.param_frame, pairs)


def vacuous_consonant_im(likelihood: Likelihood) -> IMTable:
    masses = [nested_random_set(likelihood, y) for y in likelihood.data_frame.labels]
    return IMTable.from_mass_functions(likelihood.data_frame, masses, source="consonant")


def dempster_im(likelihood: Likelihood, prior: MassFunction) -> IMTable:
    masses = []
    notes = []
    for y in likelihood.data_frame.labels:
        try:
            combined, conflict = dempster_combine(nested_random_set(likelihood, y), prior)
        except CompleteConflictError:
            raise ConflictError(f"complete conflict at this y ({y})") from None
        if conflict > 0:
            notes.append(f"y={y}: conflict {float(conflict):.6g} removed by normalization")
        masses.append(combined)
    return IMTable.from_mass_functions(likelihood.data_frame, masses, source="dempster", notes=notes)


def _grid_label(value: float) -> str:
    return f"{value:g}"


def discretized_location_model(
    points: int = 9,
    *,
    start: float = 3.0,
    step: float = 1.0,
    prior_cut: float = 7.0,
    prior_mass: float = 0.9,
) -> CredalModel:
    """Binned normal location model on a shared integer-like grid.

    Data bins are centred on the grid with the tails folded into the end bins;
    the prior puts ``prior_mass`` on {θ <= prior_cut} and the rest on the frame.
    """
    if points < 2:
        raise ValueError(f"A discretized model needs at least 2 grid points, got {points}")
    centres = start + step * np.arange(points)
    labels = tuple(_grid_label(value) for value in centres)
    frame = Frame(labels)
    edges = np.concatenate(([-np.inf], (centres[:-1] + centres[1:]) / 2.0, [np.inf]))
    table = ndtr(edges[1:, None] - centres[None, :]) - ndtr(edges[:-1, None] - centres[None, :])
    table = table / table.sum(axis=0)
    likelihood = Likelihood(frame, frame, table)
    cut_members = [label for label, value in zip(labels, centres) if value <= prior_cut]
    if not cut_members:
        raise ValueError(f"No grid point lies at or below the prior cut {prior_cut}")
    prior = MassFunction.from_pairs(frame, [(cut_members, prior_mass), (labels, 1.0 - prior_mass)])
    return CredalModel(likelihood, prior)


def curve_columns(prior: IntervalPrior, y: float, thetas: Sequence[float]) -> dict[str, np.ndarray]:
    thetas = np.asarray(thetas, dtype=float)
    combined = combined_cdf_arrays(prior, y, thetas)
    return {
        "theta": thetas,
        "lower_vacuous": _radius_probability(thetas - y),
        "upper_vacuous": 1.0 - _radius_probability(y - thetas),
        "lower_combined": combined["lower"],
        "upper_combined": combined["upper"],
    }
