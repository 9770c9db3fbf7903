"""Precise likelihood x belief-function prior: joint previsions and generalized Bayes."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from im_auditor.belief import (
    MASS_TOLERANCE,
    Frame,
    FrameMismatchError,
    Gamble,
    MassFunction,
    Subset,
    mask_indices,
)
from im_auditor.imtable import IMTable, membership_matrix

VERTEX_CAP = int(os.environ.get("IM_AUDITOR_VERTEX_CAP", "1000000"))
SUBSET_CAP = int(os.environ.get("IM_AUDITOR_SUBSET_CAP", "16"))
VERTEX_CHUNK = 4096


class ModelShapeError(ValueError):
    pass


class VertexCapError(ValueError):
    pass


class SubsetCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Likelihood:
    """``table[y, θ]`` holds L(y | θ); each column is a distribution over the data frame."""

    data_frame: Frame
    param_frame: Frame
    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.array(self.table, dtype=float)
        expected = (self.data_frame.size, self.param_frame.size)
        if table.shape != expected:
            raise ModelShapeError(f"Likelihood table has shape {table.shape}, expected {expected}")
        if not np.all(np.isfinite(table)) or np.any(table < 0.0):
            raise ModelShapeError("Likelihood entries must be finite and non-negative.")
        sums = table.sum(axis=0)
        bad = [self.param_frame.labels[i] for i in np.flatnonzero(np.abs(sums - 1.0) > MASS_TOLERANCE)]
        if bad:
            raise ModelShapeError(f"Likelihood columns do not sum to 1 for: {', '.join(bad)}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def column(self, label: str) -> np.ndarray:
        return self.table[:, self.param_frame.index(label)]

    def probability(self, y: str, theta: str) -> float:
        return float(self.table[self.data_frame.index(y), self.param_frame.index(theta)])


@dataclass(frozen=True, eq=False)
class CredalModel:
    likelihood: Likelihood
    prior: MassFunction

    def __post_init__(self) -> None:
        if self.prior.frame != self.likelihood.param_frame:
            raise FrameMismatchError("Prior frame must be the likelihood's parameter frame.")

    @property
    def data_frame(self) -> Frame:
        return self.likelihood.data_frame

    @property
    def param_frame(self) -> Frame:
        return self.likelihood.param_frame


@dataclass(frozen=True, eq=False)
class JointGamble:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or not np.all(np.isfinite(values)):
            raise ModelShapeError("A joint gamble is a finite (data x parameter) array.")
        object.__setattr__(self, "values", values)

    @classmethod
    def rectangle(cls, model: CredalModel, data: Subset, hypothesis: Subset) -> "JointGamble":
        return cls(np.outer(data.indicator, hypothesis.indicator).astype(float))

    @classmethod
    def constant(cls, model: CredalModel, value: float) -> "JointGamble":
        return cls(np.full((model.data_frame.size, model.param_frame.size), float(value)))

    def __neg__(self) -> "JointGamble":
        return JointGamble(-self.values)


@dataclass(frozen=True, eq=False)
class PriorVertex:
    allocation: tuple[tuple[int, int], ...]
    probabilities: np.ndarray


def _check_gamble(model: CredalModel, f: JointGamble) -> np.ndarray:
    expected = (model.data_frame.size, model.param_frame.size)
    if f.values.shape != expected:
        raise ModelShapeError(f"Joint gamble has shape {f.values.shape}, expected {expected}")
    return f.values


def choquet_rows(prior: MassFunction, values: np.ndarray, *, upper: bool = False) -> np.ndarray:
    """Choquet integral of each row of ``values[k, θ]`` against the prior."""
    values = np.atleast_2d(values)
    total = np.zeros(values.shape[0])
    for mask, mass in prior.focal:
        block = values[:, list(mask_indices(mask))]
        total += float(mass) * (block.max(axis=1) if upper else block.min(axis=1))
    return total


def expected_by_parameter(model: CredalModel, f: JointGamble) -> np.ndarray:
    values = _check_gamble(model, f)
    return (model.likelihood.table * values).sum(axis=0)


def joint_lower_prevision(model: CredalModel, f: JointGamble) -> float:
    return float(choquet_rows(model.prior, expected_by_parameter(model, f))[0])


def joint_upper_prevision(model: CredalModel, f: JointGamble) -> float:
    return float(choquet_rows(model.prior, expected_by_parameter(model, f), upper=True)[0])


def vertex_count(prior: MassFunction) -> int:
    return math.prod(len(mask_indices(mask)) for mask in prior.masks)


def _checked_vertex_count(prior: MassFunction, cap: int | None) -> int:
    cap = VERTEX_CAP if cap is None else cap
    count = vertex_count(prior)
    if count > cap:
        raise VertexCapError(
            f"The prior has {count} credal-set vertices, above the cap of {cap}. "
            "Use a coarser prior (fewer or smaller focal sets) or raise IM_AUDITOR_VERTEX_CAP."
        )
    return count


def prior_belief_table(prior: MassFunction) -> np.ndarray:
    masks = np.arange(1 << prior.frame.size)
    table = np.zeros(masks.shape)
    for focal, mass in prior.focal:
        table += float(mass) * ((focal & ~masks) == 0)
    return table


def _iter_vertices(prior: MassFunction):
    focal = prior.focal
    for choice in product(*(mask_indices(mask) for mask, _ in focal)):
        probabilities = np.zeros(prior.frame.size)
        for (_, mass), theta in zip(focal, choice):
            probabilities[theta] += float(mass)
        yield PriorVertex(tuple((mask, theta) for (mask, _), theta in zip(focal, choice)), probabilities)


def prior_vertices(prior: MassFunction, *, cap: int | None = None) -> list[PriorVertex]:
    """Every allocation of each focal mass to one of its members.

    The allocations include all extreme points of the prior's credal set, so
    linear and linear-fractional objectives attain their extrema on this list.
    Each vector is checked to dominate the prior's belief on every subset.
    """
    _checked_vertex_count(prior, cap)
    vertices = list(_iter_vertices(prior))
    belief = prior_belief_table(prior)
    membership = membership_matrix(prior.frame)
    for vertex in vertices:
        if np.any(vertex.probabilities @ membership < belief - MASS_TOLERANCE):
            raise AssertionError(f"prior vertex {vertex.allocation} falls below the belief function")
    return vertices


def _vertex_chunks(prior: MassFunction, cap: int | None):
    _checked_vertex_count(prior, cap)
    chunk: list[np.ndarray] = []
    for vertex in _iter_vertices(prior):
        chunk.append(vertex.probabilities)
        if len(chunk) == VERTEX_CHUNK:
            yield np.vstack(chunk)
            chunk = []
    if chunk:
        yield np.vstack(chunk)


def least_favorable_vertex(model: CredalModel, f: JointGamble, *, cap: int | None = None) -> PriorVertex:
    """Vertex minimizing the linear joint expectation of ``f``; ties go to the first enumerated."""
    per_theta = expected_by_parameter(model, f)
    vertices = prior_vertices(model.prior, cap=cap)
    scores = np.array([vertex.probabilities @ per_theta for vertex in vertices])
    return vertices[int(np.argmin(scores))]


def _slice(model: CredalModel, y: str) -> np.ndarray:
    return model.likelihood.table[model.data_frame.index(y)]


def slice_lower_probability(model: CredalModel, y: str) -> float:
    return float(choquet_rows(model.prior, _slice(model, y))[0])


def _generalized_bayes(model: CredalModel, y: str, f_y: Gamble, *, upper: bool, cap: int | None) -> float:
    if f_y.frame != model.param_frame:
        raise FrameMismatchError("Gamble frame must be the model's parameter frame.")
    values = np.array([float(v) for v in f_y.values])
    weights = _slice(model, y)
    if slice_lower_probability(model, y) <= 0.0:
        return float(values.max() if upper else values.min())
    best = -np.inf if upper else np.inf
    for chunk in _vertex_chunks(model.prior, cap):
        joint = chunk * weights
        denominator = joint.sum(axis=1)
        keep = denominator > 0.0
        if not np.any(keep):
            continue
        ratios = (joint[keep] @ values) / denominator[keep]
        best = max(best, ratios.max()) if upper else min(best, ratios.min())
    if not np.isfinite(best):
        return float(values.max() if upper else values.min())
    return float(best)


def generalized_bayes_lower(model: CredalModel, y: str, f_y: Gamble, *, cap: int | None = None) -> float:
    return _generalized_bayes(model, y, f_y, upper=False, cap=cap)


def generalized_bayes_upper(model: CredalModel, y: str, f_y: Gamble, *, cap: int | None = None) -> float:
    return _generalized_bayes(model, y, f_y, upper=True, cap=cap)


def _check_subset_cap(frame: Frame, cap: int | None) -> None:
    cap = SUBSET_CAP if cap is None else cap
    if frame.size > cap:
        raise SubsetCapError(
            f"Parameter frame has {frame.size} elements; tabulating all 2^{frame.size} hypotheses "
            f"exceeds the cap of {cap} (IM_AUDITOR_SUBSET_CAP)."
        )


def generalized_bayes_im(
    model: CredalModel,
    *,
    subset_cap: int | None = None,
    vertex_cap: int | None = None,
) -> IMTable:
    _check_subset_cap(model.param_frame, subset_cap)
    membership = membership_matrix(model.param_frame).astype(float)
    rows = np.zeros((model.data_frame.size, membership.shape[1]))
    notes = []
    for row, y in enumerate(model.data_frame.labels):
        if slice_lower_probability(model, y) <= 0.0:
            rows[row, -1] = 1.0
            notes.append(f"y={y}: joint lower probability of the data slice is 0; vacuous posterior used")
            continue
        weights = _slice(model, y)
        best = np.full(membership.shape[1], np.inf)
        for chunk in _vertex_chunks(model.prior, vertex_cap):
            joint = chunk * weights
            numerators = joint @ membership
            denominator = numerators[:, -1]
            keep = denominator > 0.0
            if np.any(keep):
                best = np.minimum(best, (numerators[keep] / denominator[keep, None]).min(axis=0))
        rows[row] = best
    return IMTable.from_rows(model.data_frame, model.param_frame, rows, source="generalized-bayes", notes=notes)


def bayes_im(likelihood: Likelihood, prior_vector: Sequence[float], *, subset_cap: int | None = None) -> IMTable:
    """Posterior probabilities of every hypothesis under a precise prior."""
    _check_subset_cap(likelihood.param_frame, subset_cap)
    prior = np.array(prior_vector, dtype=float)
    if prior.shape != (likelihood.param_frame.size,) or np.any(prior < 0.0):
        raise ModelShapeError("The prior vector needs one non-negative weight per parameter label.")
    if abs(prior.sum() - 1.0) > MASS_TOLERANCE:
        raise ModelShapeError(f"Prior weights sum to {prior.sum():.15g}, expected 1.")
    membership = membership_matrix(likelihood.param_frame).astype(float)
    joint = likelihood.table * prior
    evidence = joint.sum(axis=1)
    rows = np.zeros((likelihood.data_frame.size, membership.shape[1]))
    notes = []
    for row, y in enumerate(likelihood.data_frame.labels):
        if evidence[row] <= 0.0:
            rows[row, -1] = 1.0
            notes.append(f"y={y}: zero evidence under the prior; vacuous posterior used")
            continue
        rows[row] = (joint[row] @ membership) / evidence[row]
    return IMTable.from_rows(likelihood.data_frame, likelihood.param_frame, rows, source="bayes", notes=notes)
