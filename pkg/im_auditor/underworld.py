"""Monte Carlo betting games.

Odds convention: a policy holder accepting bets against an event E at odds
k:1 gains one stake unit when E fails and loses k stake units when E occurs.
Ruin is the first round that ends with strictly negative capital.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from im_auditor.auditors import ScrutinizerGamble, Witness, best_scrutinizer_gamble
from im_auditor.belief import MASS_TOLERANCE, Subset
from im_auditor.credal import CredalModel, least_favorable_vertex
from im_auditor.imtable import IMTable
from im_auditor.streams import DEFAULT_CHUNK_SIZE, DEFAULT_SEED, map_chunks

STRATEGIES = ("exhaustive", "witness", "random", "abstain")
AGENT2_CELL_BUDGET = 1 << 22


class SimulationConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DieBox:
    dice: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        dice = tuple((float(p), float(w)) for p, w in self.dice)
        if not dice:
            raise SimulationConfigError("A die box needs at least one die.")
        for p, w in dice:
            if not 0.0 <= p <= 1.0:
                raise SimulationConfigError(f"Ace probability {p} is outside [0, 1].")
            if w < 0.0:
                raise SimulationConfigError(f"Selection weight {w} is negative.")
        total = sum(w for _, w in dice)
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise SimulationConfigError(f"Selection weights sum to {total:.15g}, expected 1.")
        object.__setattr__(self, "dice", dice)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.dice])

    @property
    def weights(self) -> np.ndarray:
        weights = np.array([w for _, w in self.dice])
        return weights / weights.sum()


@dataclass(frozen=True)
class BetPolicy:
    odds_against: float = 4.0
    stake_unit: float = 1.0

    def __post_init__(self) -> None:
        for name in ("odds_against", "stake_unit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SimulationConfigError(f"{name} must be positive and finite, got {value}")

    @property
    def breakeven_probability(self) -> float:
        return 1.0 / (self.odds_against + 1.0)

    def drift(self, p_ace: float) -> float:
        return (1.0 - p_ace) * self.stake_unit - p_ace * self.odds_against * self.stake_unit


@dataclass(frozen=True, eq=False)
class CapitalTrajectory:
    capital: np.ndarray
    ruin_round: int | None
    start_capital: float = 0.0

    @classmethod
    def from_increments(cls, increments: np.ndarray, start_capital: float = 0.0) -> "CapitalTrajectory":
        capital = start_capital + np.cumsum(increments)
        negative = np.flatnonzero(capital < 0.0)
        return cls(capital, int(negative[0]) + 1 if negative.size else None, start_capital)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.capital, prepend=self.start_capital)

    @property
    def mean_increment(self) -> float:
        return float(self.increments.mean()) if self.capital.size else 0.0

    @property
    def std_error(self) -> float:
        if self.capital.size < 2:
            return 0.0
        return float(self.increments.std(ddof=1) / math.sqrt(self.capital.size))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"round": np.arange(1, self.capital.size + 1), "capital": self.capital})


def _require_positive(name: str, value: int) -> None:
    if value < 1:
        raise SimulationConfigError(f"{name} must be at least 1, got {value}")


def simulate_agent1(
    p_ace: float,
    policy: BetPolicy,
    rounds: int,
    seed: int = DEFAULT_SEED,
    *,
    start_capital: float = 0.0,
    workers: int = 1,
) -> CapitalTrajectory:
    if not 0.0 <= p_ace <= 1.0:
        raise SimulationConfigError(f"Ace probability {p_ace} is outside [0, 1].")
    _require_positive("rounds", rounds)
    chunks = map_chunks(lambda rng, size, _: rng.random(size) < p_ace, rounds, seed=seed, workers=workers)
    aces = np.concatenate(chunks)
    increments = np.where(aces, -policy.odds_against * policy.stake_unit, policy.stake_unit)
    return CapitalTrajectory.from_increments(increments, start_capital)


@dataclass(frozen=True)
class RuinEstimate:
    ruin_probability: float
    std_error: float
    favorable: bool
    horizon: int
    replications: int
    wager_odds: float

    def to_payload(self) -> dict[str, Any]:
        return {
            "ruin_probability": self.ruin_probability,
            "std_error": self.std_error,
            "favorable_to_agent2": self.favorable,
            "horizon": self.horizon,
            "replications": self.replications,
            "wager_odds": self.wager_odds,
        }


def simulate_agent2_wager(
    box: DieBox,
    policy: BetPolicy,
    horizon: int,
    replications: int,
    seed: int = DEFAULT_SEED,
    *,
    wager_odds: float = 9.0,
    start_capital: float = 0.0,
    workers: int = 1,
) -> RuinEstimate:
    """Estimate P(Agent 1 is ruined within ``horizon`` rounds) for a die drawn from ``box``.

    Agent 2's wager at ``wager_odds``:1 on ruin is favorable when that
    probability exceeds 1 / (wager_odds + 1).
    """
    _require_positive("horizon", horizon)
    _require_positive("replications", replications)
    probabilities = box.probabilities
    weights = box.weights
    loss = -policy.odds_against * policy.stake_unit

    def count(rng: np.random.Generator, size: int, _: int) -> int:
        dice = rng.choice(len(weights), size=size, p=weights)
        aces = rng.random((size, horizon)) < probabilities[dice][:, None]
        capital = start_capital + np.cumsum(np.where(aces, loss, policy.stake_unit), axis=1)
        return int((capital < 0.0).any(axis=1).sum())

    chunk_size = max(1, min(DEFAULT_CHUNK_SIZE, AGENT2_CELL_BUDGET // horizon))
    ruined = sum(map_chunks(count, replications, seed=seed, chunk_size=chunk_size, workers=workers))
    estimate = ruined / replications
    return RuinEstimate(
        ruin_probability=estimate,
        std_error=math.sqrt(estimate * (1.0 - estimate) / replications),
        favorable=estimate > 1.0 / (wager_odds + 1.0),
        horizon=horizon,
        replications=replications,
        wager_odds=wager_odds,
    )


@dataclass(frozen=True, eq=False)
class SideBetGameConfig:
    model: CredalModel
    im: IMTable
    strategy: str = "exhaustive"
    rounds: int = 10_000
    seed: int = DEFAULT_SEED
    generating_parameter: str | None = None
    generating_vertex: bool = False
    witness: Witness | ScrutinizerGamble | None = None
    start_capital: float = 0.0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise SimulationConfigError(f"Unknown scrutinizer strategy '{self.strategy}'. Known: {', '.join(STRATEGIES)}")
        _require_positive("rounds", self.rounds)
        if self.im.data_frame != self.model.data_frame or self.im.param_frame != self.model.param_frame:
            raise SimulationConfigError("IM table frames do not match the model.")
        if (self.generating_parameter is None) == (not self.generating_vertex):
            raise SimulationConfigError("Give exactly one of a generating parameter or the least-favorable vertex mode.")
        if self.generating_parameter is not None and self.generating_parameter not in self.model.param_frame.labels:
            raise SimulationConfigError(f"Generating parameter '{self.generating_parameter}' is not in the parameter frame.")
        if self.strategy == "witness":
            if self.witness is None:
                raise SimulationConfigError("The witness strategy needs a witness to play.")
            mask = self.witness.mask if isinstance(self.witness, Witness) else self.witness.hypothesis.mask
            if not 0 <= mask <= self.model.param_frame.full_mask:
                raise SimulationConfigError("strategy references H outside frame")
            if isinstance(self.witness, Witness) and self.witness.threshold is None:
                raise SimulationConfigError(f"A {self.witness.property} witness carries no price to play.")
        if self.generating_vertex and self.strategy not in ("exhaustive", "witness"):
            raise SimulationConfigError("The least-favorable vertex mode needs a fixed-gamble strategy (exhaustive or witness).")


@dataclass(frozen=True, eq=False)
class SideBetOutcome:
    mean_payoff_per_accepted: float
    mean_payoff_per_round: float
    std_error: float
    accepted: int
    rounds: int
    trajectory: CapitalTrajectory
    gamble_log: pd.DataFrame
    expected_payoff: float | None
    gamble: ScrutinizerGamble | None

    def to_payload(self) -> dict[str, Any]:
        return {
            "mean_payoff_per_accepted": self.mean_payoff_per_accepted,
            "mean_payoff_per_round": self.mean_payoff_per_round,
            "std_error": self.std_error,
            "accepted": self.accepted,
            "rounds": self.rounds,
            "final_capital": float(self.trajectory.capital[-1]),
            "ruin_round": self.trajectory.ruin_round,
            "expected_payoff": self.expected_payoff,
            "gamble": None
            if self.gamble is None
            else {"hypothesis": list(self.gamble.hypothesis.members), "beta": self.gamble.beta},
        }


def _fixed_gamble(config: SideBetGameConfig) -> ScrutinizerGamble | None:
    if config.strategy == "exhaustive":
        return best_scrutinizer_gamble(config.model, config.im)[0]
    if config.strategy == "witness":
        if isinstance(config.witness, ScrutinizerGamble):
            return config.witness
        return ScrutinizerGamble(Subset(config.im.param_frame, config.witness.mask), config.witness.threshold)
    return None


def _parameter_distribution(config: SideBetGameConfig, gamble: ScrutinizerGamble | None) -> np.ndarray:
    frame = config.model.param_frame
    if config.generating_vertex:
        vertex = least_favorable_vertex(config.model, gamble.payoff(config.im))
        weights = np.clip(vertex.probabilities, 0.0, None)
        return weights / weights.sum()
    weights = np.zeros(frame.size)
    weights[frame.index(config.generating_parameter)] = 1.0
    return weights


def simulate_sidebet_game(config: SideBetGameConfig) -> SideBetOutcome:
    im = config.im
    gamble = _fixed_gamble(config)
    theta_weights = _parameter_distribution(config, gamble)
    cumulative = np.cumsum(config.model.likelihood.table, axis=0)
    last_row = cumulative.shape[0] - 1
    full = im.param_frame.full_mask

    def play(rng: np.random.Generator, size: int, _: int):
        thetas = rng.choice(len(theta_weights), size=size, p=theta_weights)
        draws = rng.random(size)
        ys = np.minimum((cumulative[:, thetas] < draws[None, :]).sum(axis=0), last_row)
        masks = np.zeros(size, dtype=np.int64)
        betas = np.zeros(size)
        accepted = np.zeros(size, dtype=bool)
        if config.strategy == "random":
            for index, y in enumerate(ys):
                row = im.lower[y]
                candidates = np.flatnonzero(row > 0.0)
                if candidates.size == 0:
                    continue
                mask = int(candidates[rng.integers(candidates.size)])
                masks[index] = mask
                betas[index] = rng.uniform(0.0, row[mask])
                accepted[index] = True
        elif gamble is not None:
            masks[:] = gamble.hypothesis.mask
            betas[:] = gamble.beta
            accepted = im.lower[ys, gamble.hypothesis.mask] > gamble.beta
        inside = (masks >> thetas) & 1
        payoffs = np.where(accepted, inside - betas, 0.0)
        return payoffs, accepted, masks, betas

    chunks = map_chunks(play, config.rounds, seed=config.seed)
    payoffs = np.concatenate([chunk[0] for chunk in chunks])
    accepted = np.concatenate([chunk[1] for chunk in chunks])
    masks = np.concatenate([chunk[2] for chunk in chunks])
    betas = np.concatenate([chunk[3] for chunk in chunks])
    played = np.flatnonzero(accepted)
    log = pd.DataFrame(
        {
            "round": played + 1,
            "hypothesis": [im.hypothesis_label(int(masks[i]) & full) for i in played],
            "beta": betas[played],
            "payoff": payoffs[played],
        }
    )
    expected = None
    if gamble is not None:
        per_theta = (config.model.likelihood.table * gamble.payoff(im).values).sum(axis=0)
        expected = float(theta_weights @ per_theta)
    elif config.strategy == "abstain":
        expected = 0.0
    rounds = payoffs.size
    return SideBetOutcome(
        mean_payoff_per_accepted=float(payoffs[played].mean()) if played.size else 0.0,
        mean_payoff_per_round=float(payoffs.mean()),
        std_error=float(payoffs.std(ddof=1) / math.sqrt(rounds)) if rounds > 1 else 0.0,
        accepted=int(played.size),
        rounds=rounds,
        trajectory=CapitalTrajectory.from_increments(payoffs, config.start_capital),
        gamble_log=log,
        expected_payoff=expected,
        gamble=gamble,
    )
