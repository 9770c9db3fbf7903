"""Tabulated inferential models: a lower probability for every (y, H) pair."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from im_auditor.belief import Frame, MassFunction, Subset, mask_indices

CONJUGACY_TOLERANCE = 1e-12


class IMTableError(ValueError):
    pass


def subset_masks(frame: Frame) -> np.ndarray:
    return np.arange(1 << frame.size, dtype=np.int64)


def membership_matrix(frame: Frame) -> np.ndarray:
    """Boolean matrix ``[θ, mask]`` that is True when θ belongs to the subset."""
    masks = subset_masks(frame)
    return ((masks[None, :] >> np.arange(frame.size)[:, None]) & 1).astype(bool)


def monotone_closure(lower: np.ndarray, size: int) -> np.ndarray:
    """Smallest table above ``lower`` that is non-decreasing in H, clipped to [0, 1]."""
    closed = np.clip(np.array(lower, dtype=float), 0.0, 1.0)
    masks = np.arange(1 << size)
    for bit in range(size):
        without = masks[(masks >> bit & 1) == 0]
        closed[:, without | (1 << bit)] = np.maximum(closed[:, without | (1 << bit)], closed[:, without])
    closed[:, 0] = 0.0
    closed[:, -1] = 1.0
    return closed


@dataclass(frozen=True, eq=False)
class IMTable:
    data_frame: Frame
    param_frame: Frame
    lower: np.ndarray
    source: str = "table"
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=float)
        expected = (self.data_frame.size, 1 << self.param_frame.size)
        if lower.shape != expected:
            raise IMTableError(f"IM table has shape {lower.shape}, expected {expected}")
        if not np.all(np.isfinite(lower)):
            raise IMTableError("IM table entries must be finite.")
        if np.any(lower < 0.0) or np.any(lower > 1.0):
            raise IMTableError("IM table entries must lie in [0, 1].")
        if np.any(lower[:, 0] != 0.0):
            raise IMTableError("Lower probability of the empty hypothesis must be 0.")
        if np.any(lower[:, -1] != 1.0):
            raise IMTableError("Lower probability of the full parameter frame must be 1.")
        masks = subset_masks(self.param_frame)
        for bit in range(self.param_frame.size):
            without = masks[(masks >> bit & 1) == 0]
            if np.any(lower[:, without] > lower[:, without | (1 << bit)]):
                raise IMTableError("IM table is not monotone in the hypothesis.")
        full = self.param_frame.full_mask
        if np.any(lower + lower[:, full ^ masks] > 1.0 + CONJUGACY_TOLERANCE):
            raise IMTableError("IM table has lower probability above upper probability.")
        lower.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "notes", tuple(self.notes))

    @classmethod
    def from_rows(
        cls,
        data_frame: Frame,
        param_frame: Frame,
        rows: np.ndarray,
        *,
        source: str = "table",
        notes: Sequence[str] = (),
    ) -> "IMTable":
        """Build a table from raw rows, repairing rounding drift in monotonicity and boundary values."""
        return cls(data_frame, param_frame, monotone_closure(rows, param_frame.size), source, tuple(notes))

    @classmethod
    def vacuous(cls, data_frame: Frame, param_frame: Frame) -> "IMTable":
        rows = np.zeros((data_frame.size, 1 << param_frame.size))
        rows[:, -1] = 1.0
        return cls(data_frame, param_frame, rows, source="vacuous")

    @classmethod
    def from_mass_functions(
        cls,
        data_frame: Frame,
        masses: Sequence[MassFunction],
        *,
        source: str = "belief",
        notes: Sequence[str] = (),
    ) -> "IMTable":
        if len(masses) != data_frame.size:
            raise IMTableError(f"Expected one mass function per data label ({data_frame.size}), got {len(masses)}")
        param_frame = masses[0].frame
        rows = np.zeros((data_frame.size, 1 << param_frame.size))
        for row, m in zip(rows, masses):
            if m.frame != param_frame:
                raise IMTableError("All mass functions must share one parameter frame.")
            for mask, mass in m.focal:
                row[mask] += float(mass)
        # subset-sum transform: belief(H) = sum of masses of focal sets inside H
        masks = subset_masks(param_frame)
        for bit in range(param_frame.size):
            without = masks[(masks >> bit & 1) == 0]
            rows[:, without | (1 << bit)] += rows[:, without]
        return cls.from_rows(data_frame, param_frame, rows, source=source, notes=notes)

    @property
    def upper(self) -> np.ndarray:
        masks = subset_masks(self.param_frame)
        return 1.0 - self.lower[:, self.param_frame.full_mask ^ masks]

    def _locate(self, y: str, subset: Subset) -> tuple[int, int]:
        if subset.frame != self.param_frame:
            raise IMTableError("Hypothesis frame does not match the IM table's parameter frame.")
        return self.data_frame.index(y), subset.mask

    def lower_of(self, y: str, subset: Subset) -> float:
        row, mask = self._locate(y, subset)
        return float(self.lower[row, mask])

    def upper_of(self, y: str, subset: Subset) -> float:
        row, mask = self._locate(y, subset)
        return float(1.0 - self.lower[row, self.param_frame.full_mask ^ mask])

    def is_precise(self, tolerance: float = CONJUGACY_TOLERANCE) -> bool:
        return bool(np.all(np.abs(self.lower - self.upper) <= tolerance))

    def hypothesis_label(self, mask: int) -> str:
        members = [self.param_frame.labels[i] for i in mask_indices(mask)]
        return " ".join(members) if members else "{}"
