"""Audits of a finite IM table against a credal model.

Every acceptance event ``lower[y, H] > t`` is constant for t between two
consecutive attained values of ``lower[:, H]``. Each scan therefore
evaluates the attained values, 0 and 1, the midpoints, and a probe just
below each upper endpoint, where the violation margin of an interval peaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from im_auditor.belief import FrameMismatchError, MassFunction, Subset, mask_indices
from im_auditor.credal import CredalModel, JointGamble, Likelihood, choquet_rows
from im_auditor.imtable import IMTable, membership_matrix
from im_auditor.properties import ALL_PROPERTIES, INFORMATIONAL_PROPERTIES

VERDICT_SLACK = 1e-10
WITNESS_MARGIN = 1e-8
RIGHT_LIMIT_STEP = 1e-12


@dataclass(frozen=True)
class Witness:
    property: str
    mask: int
    hypothesis: tuple[str, ...]
    threshold: float | None
    achieved: float
    bound: float
    margin: float
    parameter: str | None = None

    @property
    def alpha(self) -> float | None:
        if self.threshold is None or self.property == "invulnerability":
            return None
        return 1.0 - self.threshold

    def subset(self, im: IMTable) -> Subset:
        return Subset(im.param_frame, self.mask)

    def to_payload(self) -> dict[str, Any]:
        return {
            "property": self.property,
            "hypothesis": list(self.hypothesis),
            "threshold": self.threshold,
            "alpha": self.alpha,
            "achieved": self.achieved,
            "bound": self.bound,
            "margin": self.margin,
            "parameter": self.parameter,
        }


@dataclass(frozen=True)
class AuditReport:
    verdicts: dict[str, str]
    witnesses: tuple[Witness, ...] = ()
    thresholds_examined: dict[str, int] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name, verdict in self.verdicts.items():
            has_witness = any(witness.property == name for witness in self.witnesses)
            if (verdict == "fail") != has_witness:
                raise ValueError(f"Verdict for {name} is '{verdict}' but witnesses say otherwise.")

    @property
    def passed(self) -> bool:
        return all(
            verdict == "pass" for name, verdict in self.verdicts.items() if name not in INFORMATIONAL_PROPERTIES
        )

    def verdict(self, name: str) -> str:
        return self.verdicts[name]

    def witnesses_for(self, name: str) -> tuple[Witness, ...]:
        return tuple(witness for witness in self.witnesses if witness.property == name)

    def merge(self, other: "AuditReport") -> "AuditReport":
        return AuditReport(
            verdicts={**self.verdicts, **other.verdicts},
            witnesses=self.witnesses + other.witnesses,
            thresholds_examined={**self.thresholds_examined, **other.thresholds_examined},
            notes=self.notes + other.notes,
        )

    def to_payload(self) -> dict[str, Any]:
        return {
            "verdicts": dict(self.verdicts),
            "passed": self.passed,
            "witnesses": [witness.to_payload() for witness in self.witnesses],
            "thresholds_examined": dict(self.thresholds_examined),
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ScrutinizerGamble:
    hypothesis: Subset
    beta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"β must lie in [0, 1], got {self.beta}")

    def payoff(self, im: IMTable) -> JointGamble:
        active = (im.lower[:, self.hypothesis.mask] > self.beta).astype(float)
        inside = np.array(self.hypothesis.indicator, dtype=float)
        return JointGamble(active[:, None] * (inside[None, :] - self.beta))


def critical_thresholds(values: np.ndarray, refinement: int = 0) -> np.ndarray:
    attained = np.unique(np.concatenate(([0.0, 1.0], np.clip(np.ravel(values), 0.0, 1.0))))
    gaps = np.diff(attained)
    midpoints = attained[:-1] + gaps / 2.0
    probes = attained[1:] - np.minimum(gaps / 2.0, RIGHT_LIMIT_STEP)
    extra = np.linspace(0.0, 1.0, refinement) if refinement else np.empty(0)
    return np.unique(np.concatenate((attained, midpoints, probes, extra)))


def _check_frames(data_frame, param_frame, im: IMTable) -> None:
    if data_frame != im.data_frame or param_frame != im.param_frame:
        raise FrameMismatchError("IM table frames do not match the model's frames.")


def _label(im: IMTable, mask: int) -> tuple[str, ...]:
    return tuple(im.param_frame.labels[i] for i in mask_indices(mask))


def _acceptance(likelihood: Likelihood, im: IMTable, mask: int, refinement: int):
    values = im.lower[:, mask]
    thresholds = critical_thresholds(values, refinement)
    active = (values[None, :] > thresholds[:, None]).astype(float)
    return thresholds, active @ likelihood.table


def _finish(
    name: str,
    candidates: Iterable[Witness],
    examined: int,
) -> AuditReport:
    witnesses = []
    notes = []
    for candidate in candidates:
        if candidate.margin > WITNESS_MARGIN:
            witnesses.append(candidate)
        elif candidate.margin > VERDICT_SLACK:
            notes.append(
                f"{name}: marginal excess {candidate.margin:.3g} at H={{{', '.join(candidate.hypothesis)}}}, "
                f"threshold {candidate.threshold}"
            )
    witnesses.sort(key=lambda witness: (-witness.margin, witness.mask))
    return AuditReport(
        verdicts={name: "fail" if witnesses else "pass"},
        witnesses=tuple(witnesses),
        thresholds_examined={name: examined},
        notes=tuple(notes),
    )


def _invulnerability_scan(model: CredalModel, im: IMTable, refinement: int = 0):
    membership = membership_matrix(im.param_frame)
    for mask in range(1 << im.param_frame.size):
        thresholds, accepted = _acceptance(model.likelihood, im, mask, refinement)
        payoff = (membership[:, mask][None, :].astype(float) - thresholds[:, None]) * accepted
        yield mask, thresholds, choquet_rows(model.prior, payoff)


def audit_invulnerability(model: CredalModel, im: IMTable, *, refinement: int = 0) -> AuditReport:
    _check_frames(model.data_frame, model.param_frame, im)
    candidates = []
    examined = 0
    for mask, thresholds, lower in _invulnerability_scan(model, im, refinement):
        examined += len(thresholds)
        best = int(np.argmin(lower))
        candidates.append(
            Witness("invulnerability", mask, _label(im, mask), float(thresholds[best]), float(lower[best]), 0.0, float(-lower[best]))
        )
    return _finish("invulnerability", candidates, examined)


def best_scrutinizer_gamble(model: CredalModel, im: IMTable) -> tuple[ScrutinizerGamble, float]:
    """The (H, β) side-bet with the smallest joint lower prevision for the statistician."""
    _check_frames(model.data_frame, model.param_frame, im)
    best_value = np.inf
    best: tuple[int, float] = (im.param_frame.full_mask, 1.0)
    for mask, thresholds, lower in _invulnerability_scan(model, im):
        index = int(np.argmin(lower))
        if lower[index] < best_value:
            best_value = float(lower[index])
            best = (mask, float(thresholds[index]))
    return ScrutinizerGamble(Subset(im.param_frame, best[0]), best[1]), best_value


def _validity_candidates(likelihood: Likelihood, im: IMTable, upper_of, name: str, refinement: int):
    outside = ~membership_matrix(im.param_frame)
    examined = 0
    candidates = []
    for mask in range(1 << im.param_frame.size):
        thresholds, accepted = _acceptance(likelihood, im, mask, refinement)
        examined += len(thresholds)
        upper = upper_of(accepted * outside[:, mask][None, :], outside[:, mask])
        margins = upper - (1.0 - thresholds)
        best = int(np.argmax(margins))
        candidates.append(
            Witness(name, mask, _label(im, mask), float(thresholds[best]), float(upper[best]),
                    float(1.0 - thresholds[best]), float(margins[best]))
        )
    return candidates, examined


def audit_validity(model: CredalModel, im: IMTable, *, refinement: int = 0) -> AuditReport:
    _check_frames(model.data_frame, model.param_frame, im)
    candidates, examined = _validity_candidates(
        model.likelihood, im, lambda values, _: choquet_rows(model.prior, values, upper=True), "validity", refinement
    )
    return _finish("validity", candidates, examined)


def _sup_outside(values: np.ndarray, outside: np.ndarray) -> np.ndarray:
    if not outside.any():
        return np.zeros(values.shape[0])
    return values[:, outside].max(axis=1)


def audit_validity_vacuous(likelihood: Likelihood, im: IMTable, *, refinement: int = 0) -> AuditReport:
    _check_frames(likelihood.data_frame, likelihood.param_frame, im)
    candidates, examined = _validity_candidates(likelihood, im, _sup_outside, "validity_vacuous", refinement)
    return _finish("validity_vacuous", candidates, examined)


def audit_strong_validity(model: CredalModel, im: IMTable, *, refinement: int = 0) -> AuditReport:
    _check_frames(model.data_frame, model.param_frame, im)
    size = im.param_frame.size
    full = im.param_frame.full_mask
    co_singletons = [full ^ (1 << theta) for theta in range(size)]
    # Π̲_y(𝕋∖{θ}) > t is the whole existential event by monotonicity in H
    values = im.lower[:, co_singletons]
    thresholds = critical_thresholds(values, refinement)
    accepted = (values[None, :, :] > thresholds[:, None, None]).astype(float)
    per_theta = np.einsum("kyt,yt->kt", accepted, model.likelihood.table)
    upper = choquet_rows(model.prior, per_theta, upper=True)
    margins = upper - (1.0 - thresholds)
    best = int(np.argmax(margins))
    theta = int(np.argmax(per_theta[best]))
    mask = co_singletons[theta]
    candidate = Witness(
        "strong_validity", mask, _label(im, mask), float(thresholds[best]), float(upper[best]),
        float(1.0 - thresholds[best]), float(margins[best]), parameter=im.param_frame.labels[theta],
    )
    return _finish("strong_validity", [candidate], len(thresholds))


def prior_plausibility_table(prior: MassFunction) -> np.ndarray:
    masks = np.arange(1 << prior.frame.size)
    table = np.zeros(masks.shape)
    for focal, mass in prior.focal:
        table += float(mass) * ((masks & focal) != 0)
    return table


def audit_no_sure_loss(prior: MassFunction, im: IMTable) -> AuditReport:
    if prior.frame != im.param_frame:
        raise FrameMismatchError("Prior frame does not match the IM table's parameter frame.")
    floor = im.lower.min(axis=0)
    plausible = prior_plausibility_table(prior)
    gaps = floor - plausible
    candidates = [
        Witness("no_sure_loss", mask, _label(im, mask), None, float(floor[mask]), float(plausible[mask]), float(gaps[mask]))
        for mask in range(len(gaps))
    ]
    return _finish("no_sure_loss", candidates, 0)


def false_confidence_search(likelihood: Likelihood, im: IMTable, *, refinement: int = 0) -> Witness | None:
    _check_frames(likelihood.data_frame, likelihood.param_frame, im)
    membership = membership_matrix(im.param_frame)
    best: Witness | None = None
    for mask in range(im.param_frame.full_mask):
        thresholds, accepted = _acceptance(likelihood, im, mask, refinement)
        outside = np.flatnonzero(~membership[:, mask])
        margins = accepted[:, outside] - (1.0 - thresholds)[:, None]
        k, j = np.unravel_index(int(np.argmax(margins)), margins.shape)
        margin = float(margins[k, j])
        if margin > WITNESS_MARGIN and (best is None or margin > best.margin):
            best = Witness(
                "false_confidence", mask, _label(im, mask), float(thresholds[k]), float(accepted[k, outside[j]]),
                float(1.0 - thresholds[k]), margin, parameter=im.param_frame.labels[int(outside[j])],
            )
    return best


def build_check_gamble(
    im: IMTable,
    hypothesis: Subset,
    alpha: float,
    *,
    threshold: float | None = None,
) -> tuple[JointGamble, JointGamble]:
    """Scrutinizer gamble at β = 1 - α and the dominating gamble whose lower
    prevision is α minus the joint upper probability of false acceptance."""
    if hypothesis.frame != im.param_frame:
        raise FrameMismatchError("Hypothesis frame does not match the IM table.")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"α must lie in [0, 1], got {alpha}")
    cut = 1.0 - alpha if threshold is None else threshold
    active = (im.lower[:, hypothesis.mask] > cut).astype(float)
    inside = np.array(hypothesis.indicator, dtype=float)
    scrutinizer = active[:, None] * (inside[None, :] - cut)
    check = alpha - active[:, None] * (1.0 - inside)[None, :]
    return JointGamble(scrutinizer), JointGamble(check)


def run_audits(
    model: CredalModel,
    im: IMTable,
    properties: Iterable[str] = ALL_PROPERTIES,
    *,
    refinement: int = 0,
) -> AuditReport:
    requested = tuple(properties)
    report = AuditReport(verdicts={}, notes=tuple(im.notes))
    for name in ALL_PROPERTIES:
        if name not in requested:
            continue
        if name == "invulnerability":
            part = audit_invulnerability(model, im, refinement=refinement)
        elif name == "validity":
            part = audit_validity(model, im, refinement=refinement)
        elif name == "validity_vacuous":
            part = audit_validity_vacuous(model.likelihood, im, refinement=refinement)
        elif name == "strong_validity":
            part = audit_strong_validity(model, im, refinement=refinement)
        elif name == "no_sure_loss":
            part = audit_no_sure_loss(model.prior, im)
        else:
            witness = false_confidence_search(model.likelihood, im, refinement=refinement)
            part = AuditReport(
                verdicts={"false_confidence": "fail" if witness else "pass"},
                witnesses=(witness,) if witness else (),
                thresholds_examined={"false_confidence": 0},
            )
        report = report.merge(part)
    return report
