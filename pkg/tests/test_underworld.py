from __future__ import annotations

import unittest
from pathlib import Path

import numpy as np

from im_auditor.auditors import ScrutinizerGamble, Witness, false_confidence_search
from im_auditor.belief import Frame, MassFunction, Subset
from im_auditor.credal import CredalModel, Likelihood, bayes_im, generalized_bayes_im
from im_auditor.imtable import IMTable
from im_auditor.modelfile import read_model_file
from im_auditor.underworld import (
    BetPolicy,
    CapitalTrajectory,
    DieBox,
    SideBetGameConfig,
    SimulationConfigError,
    simulate_agent1,
    simulate_agent2_wager,
    simulate_sidebet_game,
)

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "im_auditor" / "bundled" / "models"
POLICY = BetPolicy(odds_against=4.0, stake_unit=1.0)


def load(name: str) -> CredalModel:
    return read_model_file(MODELS / f"{name}.model").credal_model()


def uniform_bayes(model: CredalModel) -> IMTable:
    size = model.param_frame.size
    return bayes_im(model.likelihood, [1.0 / size] * size)


class PolicyAndBoxTests(unittest.TestCase):
    def test_breakeven_and_drift(self):
        self.assertAlmostEqual(POLICY.breakeven_probability, 0.2)
        self.assertAlmostEqual(POLICY.drift(1 / 6), 1 / 6)
        self.assertAlmostEqual(POLICY.drift(0.2), 0.0)
        self.assertAlmostEqual(POLICY.drift(0.5), -1.5)

    def test_rejects_bad_policy_and_box(self):
        with self.assertRaises(SimulationConfigError):
            BetPolicy(odds_against=0.0)
        with self.assertRaises(SimulationConfigError):
            BetPolicy(stake_unit=float("inf"))
        with self.assertRaises(SimulationConfigError):
            DieBox(())
        with self.assertRaises(SimulationConfigError):
            DieBox(((1.2, 1.0),))
        with self.assertRaises(SimulationConfigError):
            DieBox(((0.1, 0.5), (0.2, 0.4)))

    def test_trajectory_ruin_round(self):
        trajectory = CapitalTrajectory.from_increments(np.array([1.0, -4.0, 1.0]))
        np.testing.assert_allclose(trajectory.capital, [1.0, -3.0, -2.0])
        self.assertEqual(trajectory.ruin_round, 2)
        np.testing.assert_allclose(trajectory.increments, [1.0, -4.0, 1.0])
        self.assertEqual(list(trajectory.to_frame().columns), ["round", "capital"])


class AgentOneTests(unittest.TestCase):
    def test_mean_increment_matches_drift(self):
        for p_ace in (1 / 6, 1 / 5, 1 / 2):
            trajectory = simulate_agent1(p_ace, POLICY, 100_000, seed=5)
            self.assertLessEqual(abs(trajectory.mean_increment - POLICY.drift(p_ace)), 3 * trajectory.std_error)

    def test_die_without_aces_never_loses(self):
        trajectory = simulate_agent1(0.0, POLICY, 500, seed=1)
        self.assertTrue(np.all(np.diff(trajectory.capital) > 0))
        self.assertIsNone(trajectory.ruin_round)
        self.assertEqual(trajectory.capital[-1], 500.0)

    def test_worker_count_does_not_change_the_path(self):
        single = simulate_agent1(1 / 6, POLICY, 50_000, seed=9, workers=1)
        pooled = simulate_agent1(1 / 6, POLICY, 50_000, seed=9, workers=4)
        np.testing.assert_array_equal(single.capital, pooled.capital)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(SimulationConfigError):
            simulate_agent1(1.5, POLICY, 10)
        with self.assertRaises(SimulationConfigError):
            simulate_agent1(0.5, POLICY, 0)


class AgentTwoTests(unittest.TestCase):
    def test_one_round_ruin_is_the_ace_probability(self):
        estimate = simulate_agent2_wager(DieBox(((1 / 6, 1.0),)), POLICY, horizon=1, replications=40_000, seed=3)
        self.assertLessEqual(abs(estimate.ruin_probability - 1 / 6), 4 * estimate.std_error)

    def test_favorable_die_keeps_a_cushioned_agent_safe(self):
        estimate = simulate_agent2_wager(
            DieBox(((1 / 6, 1.0),)), POLICY, horizon=10, replications=20_000, seed=3, start_capital=20.0
        )
        self.assertLess(estimate.ruin_probability, 0.01)
        self.assertFalse(estimate.favorable)

    def test_unfavorable_die_is_ruined_and_the_wager_pays(self):
        estimate = simulate_agent2_wager(
            DieBox(((1 / 2, 1.0),)), POLICY, horizon=200, replications=20_000, seed=3, start_capital=20.0
        )
        self.assertGreater(estimate.ruin_probability, 0.99)
        self.assertTrue(estimate.favorable)
        self.assertEqual(estimate.to_payload()["wager_odds"], 9.0)

    def test_worker_count_does_not_change_the_estimate(self):
        box = DieBox(((1 / 6, 0.5), (1 / 2, 0.5)))
        single = simulate_agent2_wager(box, POLICY, horizon=30, replications=30_000, seed=8, workers=1)
        pooled = simulate_agent2_wager(box, POLICY, horizon=30, replications=30_000, seed=8, workers=3)
        self.assertEqual(single.ruin_probability, pooled.ruin_probability)

    def test_rejects_empty_runs(self):
        with self.assertRaises(SimulationConfigError):
            simulate_agent2_wager(DieBox(((0.5, 1.0),)), POLICY, horizon=5, replications=0)
        with self.assertRaises(SimulationConfigError):
            simulate_agent2_wager(DieBox(((0.5, 1.0),)), POLICY, horizon=0, replications=5)


class SideBetGameTests(unittest.TestCase):
    def test_false_confidence_witness_loses_money_for_the_statistician(self):
        model = load("demo3")
        im = uniform_bayes(model)
        witness = false_confidence_search(model.likelihood, im)
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, im, strategy="witness", rounds=100_000, seed=4,
                              generating_parameter=witness.parameter, witness=witness)
        )
        self.assertLess(outcome.expected_payoff, 0.0)
        self.assertLess(outcome.mean_payoff_per_round, -3 * outcome.std_error)
        self.assertLessEqual(abs(outcome.mean_payoff_per_round - outcome.expected_payoff), 4 * outcome.std_error + 1e-9)
        self.assertEqual(outcome.gamble.hypothesis.mask, witness.mask)

    def test_generalized_bayes_offers_no_losing_bet_on_the_demo(self):
        model = load("demo3")
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, generalized_bayes_im(model), rounds=5_000, generating_parameter="t3")
        )
        self.assertEqual(outcome.mean_payoff_per_round, 0.0)
        self.assertGreaterEqual(outcome.expected_payoff, 0.0)

    def test_generalized_bayes_on_a_partial_prior_does_not_lose_at_a_credal_parameter(self):
        # t1 lies in every focal set of the nested prior, so the point mass on t1 is a credal prior
        model = load("demo3-nested")
        gb = generalized_bayes_im(model)
        self.assertTrue(np.any(gb.lower[:, 1:-1] > 0.0))
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, gb, rounds=100_000, seed=4, generating_parameter="t1")
        )
        self.assertGreaterEqual(outcome.expected_payoff, -1e-10)
        self.assertGreaterEqual(outcome.mean_payoff_per_round, -3 * outcome.std_error - 1e-12)

        witness = false_confidence_search(model.likelihood, uniform_bayes(model))
        same_bet = ScrutinizerGamble(Subset(gb.param_frame, witness.mask), witness.threshold)
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, gb, strategy="witness", rounds=100_000, seed=4,
                              generating_parameter="t1", witness=same_bet)
        )
        self.assertGreaterEqual(outcome.expected_payoff, -1e-10)
        self.assertGreaterEqual(outcome.mean_payoff_per_round, -3 * outcome.std_error - 1e-12)

    def test_every_generalized_bayes_side_bet_has_nonnegative_value_at_a_credal_parameter(self):
        model = load("demo3-nested")
        gb = generalized_bayes_im(model)
        played = 0
        for mask in range(1, model.param_frame.full_mask):
            for beta in np.unique(gb.lower[:, mask]):
                if beta <= 1e-9:
                    continue
                gamble = ScrutinizerGamble(Subset(gb.param_frame, mask), float(beta) - 1e-9)
                outcome = simulate_sidebet_game(
                    SideBetGameConfig(model, gb, strategy="witness", rounds=1_000, seed=mask,
                                      generating_parameter="t1", witness=gamble)
                )
                self.assertGreaterEqual(outcome.expected_payoff, -1e-10, msg=f"{mask} {beta}")
                played += 1
        self.assertGreater(played, 0)

    def test_least_favorable_vertex_still_cannot_beat_generalized_bayes(self):
        model = load("demo3-nested")
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, generalized_bayes_im(model), rounds=20_000, seed=12, generating_vertex=True)
        )
        self.assertGreaterEqual(outcome.expected_payoff, -1e-10)
        self.assertGreaterEqual(outcome.mean_payoff_per_round, -3 * outcome.std_error - 1e-12)

    def test_exhaustive_mean_tracks_the_exact_expectation(self):
        model = load("demo3")
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, uniform_bayes(model), rounds=40_000, seed=21, generating_parameter="t2")
        )
        self.assertIsNotNone(outcome.gamble)
        self.assertLessEqual(abs(outcome.mean_payoff_per_round - outcome.expected_payoff), 4 * outcome.std_error + 1e-9)

    def test_abstaining_scrutinizer_never_plays(self):
        model = load("demo3")
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, uniform_bayes(model), strategy="abstain", rounds=1_000, generating_parameter="t1")
        )
        self.assertEqual(outcome.accepted, 0)
        self.assertEqual(outcome.expected_payoff, 0.0)
        self.assertTrue(outcome.gamble_log.empty)
        self.assertTrue(np.all(outcome.trajectory.capital == 0.0))

    def test_random_scrutinizer_pays_indicator_minus_price(self):
        model = load("demo3")
        im = uniform_bayes(model)
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, im, strategy="random", rounds=2_000, seed=2, generating_parameter="t1")
        )
        self.assertGreater(outcome.accepted, 0)
        log = outcome.gamble_log
        self.assertEqual(list(log.columns), ["round", "hypothesis", "beta", "payoff"])
        won = np.isclose(log["payoff"], 1.0 - log["beta"])
        lost = np.isclose(log["payoff"], -log["beta"])
        self.assertTrue(np.all(won | lost))
        self.assertIsNone(outcome.expected_payoff)

    def test_same_seed_same_game(self):
        model = load("demo3")
        config = SideBetGameConfig(model, uniform_bayes(model), strategy="random", rounds=3_000, seed=77,
                                   generating_parameter="t2")
        first, second = simulate_sidebet_game(config), simulate_sidebet_game(config)
        np.testing.assert_array_equal(first.trajectory.capital, second.trajectory.capital)
        self.assertTrue(first.gamble_log.equals(second.gamble_log))

    def test_explicit_gamble_can_be_played(self):
        model = load("demo3")
        im = uniform_bayes(model)
        gamble = ScrutinizerGamble(model.param_frame.subset(["t1", "t2"]), 0.5)
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, im, strategy="witness", rounds=10_000, seed=6, generating_parameter="t3", witness=gamble)
        )
        # t3 is outside the hypothesis, which is accepted on y1 and y2
        self.assertAlmostEqual(outcome.expected_payoff, -0.5 * 0.2)

    def test_invalid_configurations(self):
        model = load("demo3")
        im = uniform_bayes(model)
        witness = Witness("no_sure_loss", 1, ("t1",), None, 1.0, 0.5, 0.5)
        cases = [
            dict(strategy="bluff", generating_parameter="t1"),
            dict(generating_parameter="t1", generating_vertex=True),
            dict(),
            dict(generating_parameter="t9"),
            dict(strategy="witness", generating_parameter="t1"),
            dict(strategy="witness", generating_parameter="t1", witness=witness),
            dict(strategy="random", generating_vertex=True),
            dict(generating_parameter="t1", rounds=0),
        ]
        for kwargs in cases:
            with self.subTest(kwargs=kwargs), self.assertRaises(SimulationConfigError):
                SideBetGameConfig(model, im, **kwargs)
        other = Frame(("a", "b"))
        mismatched = IMTable.vacuous(Frame(("y",)), other)
        with self.assertRaises(SimulationConfigError):
            SideBetGameConfig(model, mismatched, generating_parameter="t1")

    def test_precise_model_with_two_parameters(self):
        theta = Frame(("t1", "t2"))
        data = Frame(("y1", "y2"))
        model = CredalModel(Likelihood(data, theta, np.array([[0.9, 0.2], [0.1, 0.8]])), MassFunction.vacuous(theta))
        outcome = simulate_sidebet_game(
            SideBetGameConfig(model, generalized_bayes_im(model), rounds=100, generating_parameter="t1")
        )
        self.assertEqual(outcome.to_payload()["rounds"], 100)


if __name__ == "__main__":
    unittest.main()
