"""
Shared audit property catalogue.

One place for property names, ordering and explain text, so the auditors,
the reports and the CLI never drift apart.
"""

from __future__ import annotations

from typing import Any


PROPERTY_DEFINITIONS: dict[str, dict[str, Any]] = {
    "invulnerability": {
        "title": "Invulnerability",
        "description": (
            "Every side-bet the scrutinizer can build from the IM, paying 1(θ in H) - β whenever the IM's "
            "lower probability of H exceeds β, has non-negative joint lower prevision."
        ),
        "thresholds": "β ranges over the attained lower probabilities of H, 0, 1, midpoints and right-limit probes.",
        "witness": "A hypothesis H and price β at which the statistician expects to lose money under the joint model.",
        "requires_prior": True,
    },
    "validity": {
        "title": "Validity",
        "description": (
            "For every hypothesis H and level α, the joint upper probability that the IM gives H lower "
            "probability above 1 - α while H is false is at most α."
        ),
        "thresholds": "α = 1 - t with t over the attained lower probabilities of H, 0, 1, midpoints and right-limit probes.",
        "witness": "A hypothesis H and level α at which false confidence in H occurs too often.",
        "requires_prior": True,
    },
    "validity_vacuous": {
        "title": "Validity under a vacuous prior",
        "description": "Validity with the supremum taken directly over parameter values outside H.",
        "thresholds": "Same threshold set as validity.",
        "witness": "A hypothesis H and level α violated by some parameter value outside H.",
        "requires_prior": False,
    },
    "strong_validity": {
        "title": "Strong validity",
        "description": (
            "Uniform version of validity: the joint upper probability that some false hypothesis gets lower "
            "probability above 1 - α is at most α. Reduced to the hypotheses that omit one parameter value."
        ),
        "thresholds": "α = 1 - t with t over the attained lower probabilities of every co-singleton.",
        "witness": "A level α and the co-singleton hypothesis carrying the excess.",
        "requires_prior": True,
        "informational": True,
    },
    "no_sure_loss": {
        "title": "No sure loss",
        "description": (
            "For every hypothesis H, the smallest lower probability the IM assigns to H over all data "
            "values does not exceed the prior's upper probability of H."
        ),
        "thresholds": "No thresholds; one comparison per hypothesis.",
        "witness": "A hypothesis H and the money-pump amount: buy H at the prior's upper price, sell at the IM's lower price.",
        "requires_prior": True,
    },
    "false_confidence": {
        "title": "False confidence search",
        "description": (
            "Exhaustive search for a false hypothesis that the IM assigns high lower probability with high "
            "frequency under some parameter value outside it."
        ),
        "thresholds": "Same threshold set as validity, scanned for every parameter value outside H.",
        "witness": "The maximal-margin (H, α, θ) triple with θ outside H.",
        "requires_prior": False,
        "informational": True,
    },
}

ALL_PROPERTIES = tuple(PROPERTY_DEFINITIONS)
# Reported with witnesses but never turn an audit into a failure.
INFORMATIONAL_PROPERTIES = tuple(
    name for name, definition in PROPERTY_DEFINITIONS.items() if definition.get("informational", False)
)


def parse_property_list(spec: str) -> tuple[str, ...]:
    names = [item.strip() for item in spec.split(",") if item.strip()]
    if not names or names == ["all"]:
        return ALL_PROPERTIES
    unknown = [name for name in names if name not in PROPERTY_DEFINITIONS]
    if unknown:
        raise ValueError(
            f"Unknown property: {', '.join(unknown)}. Known properties: {', '.join(ALL_PROPERTIES)}"
        )
    return tuple(name for name in ALL_PROPERTIES if name in names)


def explain_property(name: str) -> dict[str, Any]:
    definition = PROPERTY_DEFINITIONS[name]
    return {"property": name, **definition}
