"""Finite frames, mass functions, Choquet previsions and Dempster's rule.

Subsets are stored as integer bitmasks over the frame's label order, so
``Subset(frame, 0b101)`` is ``{labels[0], labels[2]}``. Masses may be
``float`` or ``fractions.Fraction``; with Fraction inputs every operation
in this module stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

Number = Union[float, Fraction]

MASS_TOLERANCE = 1e-12


class FrameMismatchError(ValueError):
    pass


class MassFunctionError(ValueError):
    pass


class CompleteConflictError(ValueError):
    pass


@lru_cache(maxsize=4096)
def mask_indices(mask: int) -> tuple[int, ...]:
    indices = []
    index = 0
    while mask:
        if mask & 1:
            indices.append(index)
        mask >>= 1
        index += 1
    return tuple(indices)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Frame:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValueError("A frame needs at least one element.")
        if len(set(labels)) != len(labels):
            duplicates = sorted({label for label in labels if labels.count(label) > 1})
            raise ValueError(f"Frame labels must be unique; duplicated: {', '.join(duplicates)}")
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"Unknown label '{label}' for frame ({', '.join(self.labels)})") from None

    def subset(self, members: Iterable[str]) -> "Subset":
        mask = 0
        for label in members:
            mask |= 1 << self.index(label)
        return Subset(self, mask)

    def empty(self) -> "Subset":
        return Subset(self, 0)

    def full(self) -> "Subset":
        return Subset(self, self.full_mask)

    def singleton(self, label: str) -> "Subset":
        return Subset(self, 1 << self.index(label))

    def all_subsets(self) -> list["Subset"]:
        return [Subset(self, mask) for mask in range(1 << self.size)]


def _check_same_frame(left: Frame, right: Frame) -> None:
    if left != right:
        raise FrameMismatchError(
            f"Frame mismatch: ({', '.join(left.labels)}) vs ({', '.join(right.labels)})"
        )


@dataclass(frozen=True)
class Subset:
    frame: Frame
    mask: int

    def __post_init__(self) -> None:
        if not 0 <= self.mask <= self.frame.full_mask:
            raise ValueError(f"Subset mask {self.mask} does not fit a frame of size {self.frame.size}")

    @property
    def indices(self) -> tuple[int, ...]:
        return mask_indices(self.mask)

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(self.frame.labels[i] for i in self.indices)

    @property
    def indicator(self) -> tuple[bool, ...]:
        return tuple(bool(self.mask >> i & 1) for i in range(self.frame.size))

    def is_empty(self) -> bool:
        return self.mask == 0

    def complement(self) -> "Subset":
        return Subset(self.frame, self.frame.full_mask ^ self.mask)

    def issubset(self, other: "Subset") -> bool:
        _check_same_frame(self.frame, other.frame)
        return self.mask & other.mask == self.mask

    def __and__(self, other: "Subset") -> "Subset":
        _check_same_frame(self.frame, other.frame)
        return Subset(self.frame, self.mask & other.mask)

    def __or__(self, other: "Subset") -> "Subset":
        _check_same_frame(self.frame, other.frame)
        return Subset(self.frame, self.mask | other.mask)

    def __contains__(self, label: str) -> bool:
        return bool(self.mask >> self.frame.index(label) & 1)

    def __len__(self) -> int:
        return popcount(self.mask)

    def __iter__(self):
        return iter(self.members)

    def __str__(self) -> str:
        return "{" + ", ".join(self.members) + "}"


@dataclass(frozen=True)
class Gamble:
    frame: Frame
    values: tuple[Number, ...]

    def __post_init__(self) -> None:
        values = tuple(self.values)
        if len(values) != self.frame.size:
            raise ValueError(f"Gamble has {len(values)} values for a frame of size {self.frame.size}")
        for value in values:
            if not math.isfinite(float(value)):
                raise ValueError(f"Gamble values must be finite, got {value!r}")
        object.__setattr__(self, "values", values)

    @classmethod
    def indicator(cls, subset: Subset, *, exact: bool = False) -> "Gamble":
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls(subset.frame, tuple(one if flag else zero for flag in subset.indicator))

    @classmethod
    def constant(cls, frame: Frame, value: Number) -> "Gamble":
        return cls(frame, (value,) * frame.size)

    def __neg__(self) -> "Gamble":
        return Gamble(self.frame, tuple(-value for value in self.values))


SubsetSpec = Union[Subset, int, Iterable[str]]


def _as_mask(frame: Frame, spec: SubsetSpec) -> int:
    if isinstance(spec, Subset):
        _check_same_frame(frame, spec.frame)
        return spec.mask
    if isinstance(spec, int):
        return Subset(frame, spec).mask
    if isinstance(spec, str):
        return frame.subset([spec]).mask
    return frame.subset(spec).mask


@dataclass(frozen=True)
class MassFunction:
    """Basic probability assignment with focal sets stored as ``(mask, mass)``
    pairs sorted by mask."""

    frame: Frame
    focal: tuple[tuple[int, Number], ...]

    def __post_init__(self) -> None:
        focal = tuple(sorted(((int(mask), mass) for mask, mass in self.focal), key=lambda item: item[0]))
        if not focal:
            raise MassFunctionError("A mass function needs at least one focal set.")
        seen: set[int] = set()
        total: Number = 0
        for mask, mass in focal:
            Subset(self.frame, mask)
            if mask == 0:
                raise MassFunctionError("The empty set cannot be a focal set.")
            if mask in seen:
                raise MassFunctionError(f"Duplicate focal set {Subset(self.frame, mask)}.")
            if not mass > 0:
                raise MassFunctionError(f"Focal set {Subset(self.frame, mask)} has non-positive mass {mass}.")
            seen.add(mask)
            total += mass
        if abs(total - 1) > MASS_TOLERANCE:
            raise MassFunctionError(f"Masses sum to {float(total):.15g}, expected 1 within {MASS_TOLERANCE:g}.")
        object.__setattr__(self, "focal", focal)

    @classmethod
    def from_pairs(
        cls,
        frame: Frame,
        pairs: Iterable[tuple[SubsetSpec, Number]],
        *,
        renormalize: bool = False,
    ) -> "MassFunction":
        merged: dict[int, Number] = {}
        for spec, mass in pairs:
            mask = _as_mask(frame, spec)
            merged[mask] = merged.get(mask, 0) + mass
        if renormalize:
            total = sum(merged.values())
            if not total > 0:
                raise MassFunctionError("Cannot renormalize masses with a non-positive total.")
            merged = {mask: mass / total for mask, mass in merged.items()}
        return cls(frame, tuple(merged.items()))

    @classmethod
    def vacuous(cls, frame: Frame, *, exact: bool = False) -> "MassFunction":
        return cls(frame, ((frame.full_mask, Fraction(1) if exact else 1.0),))

    @classmethod
    def point_mass(cls, frame: Frame, label: str, *, exact: bool = False) -> "MassFunction":
        return cls(frame, ((frame.singleton(label).mask, Fraction(1) if exact else 1.0),))

    @classmethod
    def from_probabilities(cls, frame: Frame, probabilities: Sequence[Number]) -> "MassFunction":
        if len(probabilities) != frame.size:
            raise MassFunctionError(f"Expected {frame.size} probabilities, got {len(probabilities)}.")
        return cls(frame, tuple((1 << i, p) for i, p in enumerate(probabilities) if p > 0))

    @property
    def entries(self) -> list[tuple[Subset, Number]]:
        return [(Subset(self.frame, mask), mass) for mask, mass in self.focal]

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(mask for mask, _ in self.focal)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(mass, Fraction) for _, mass in self.focal)

    def mass_of(self, subset: SubsetSpec) -> Number:
        mask = _as_mask(self.frame, subset)
        return dict(self.focal).get(mask, 0)

    def is_vacuous(self) -> bool:
        return self.masks == (self.frame.full_mask,)

    def to_payload(self) -> dict:
        return {
            "frame": list(self.frame.labels),
            "focal": [
                {"members": list(Subset(self.frame, mask).members), "mass": format_number(mass)}
                for mask, mass in self.focal
            ],
        }


def format_number(value: Number) -> str:
    """Decimal string for floats (shortest round-trip form); Fractions print
    as a terminating decimal when they have one and as ``p/q`` otherwise."""
    if isinstance(value, Fraction):
        denominator = value.denominator
        for prime in (2, 5):
            while denominator % prime == 0:
                denominator //= prime
        if denominator != 1:
            return f"{value.numerator}/{value.denominator}"
        digits = 0
        scaled = value
        while scaled.denominator != 1:
            scaled *= 10
            digits += 1
        text = f"{abs(scaled.numerator):0{digits + 1}d}"
        sign = "-" if value < 0 else ""
        if digits == 0:
            return sign + text
        return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return repr(float(value))


def _subset_mask(m: MassFunction, subset: Subset) -> int:
    _check_same_frame(m.frame, subset.frame)
    return subset.mask


def belief(m: MassFunction, subset: Subset) -> Number:
    mask = _subset_mask(m, subset)
    return sum((mass for focal, mass in m.focal if focal & mask == focal), 0)


def plausibility(m: MassFunction, subset: Subset) -> Number:
    mask = _subset_mask(m, subset)
    return sum((mass for focal, mass in m.focal if focal & mask), 0)


def _gamble_values(m: MassFunction, f: Gamble) -> tuple[Number, ...]:
    _check_same_frame(m.frame, f.frame)
    return f.values


def lower_prevision(m: MassFunction, f: Gamble) -> Number:
    values = _gamble_values(m, f)
    return sum((mass * min(values[i] for i in mask_indices(focal)) for focal, mass in m.focal), 0)


def upper_prevision(m: MassFunction, f: Gamble) -> Number:
    values = _gamble_values(m, f)
    return sum((mass * max(values[i] for i in mask_indices(focal)) for focal, mass in m.focal), 0)


def dempster_combine(m1: MassFunction, m2: MassFunction) -> tuple[MassFunction, Number]:
    """Normalized conjunctive combination; returns ``(combined, conflict)``."""
    _check_same_frame(m1.frame, m2.frame)
    combined: dict[int, Number] = {}
    conflict: Number = 0
    for left, left_mass in m1.focal:
        for right, right_mass in m2.focal:
            weight = left_mass * right_mass
            meet = left & right
            if meet:
                combined[meet] = combined.get(meet, 0) + weight
            else:
                conflict += weight
    if not combined:
        raise CompleteConflictError("complete conflict: every pair of focal sets has an empty intersection")
    retained = sum(combined.values(), 0)
    return MassFunction(m1.frame, tuple((mask, weight / retained) for mask, weight in combined.items())), conflict


def is_nested(m: MassFunction) -> bool:
    chain = sorted(m.masks, key=popcount)
    return all(inner & outer == inner for inner, outer in zip(chain, chain[1:]))
