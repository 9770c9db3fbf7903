from __future__ import annotations

import unittest

import numpy as np

from im_auditor.belief import Frame, FrameMismatchError, Gamble, MassFunction
from im_auditor.credal import (
    CredalModel,
    JointGamble,
    Likelihood,
    ModelShapeError,
    SubsetCapError,
    VertexCapError,
    bayes_im,
    generalized_bayes_im,
    generalized_bayes_lower,
    generalized_bayes_upper,
    joint_lower_prevision,
    joint_upper_prevision,
    least_favorable_vertex,
    prior_belief_table,
    prior_vertices,
)
from im_auditor.imtable import IMTable, IMTableError, membership_matrix


THETA = Frame(("t1", "t2"))
DATA = Frame(("y1", "y2"))
TWO_POINT = Likelihood(DATA, THETA, np.array([[0.8, 0.4], [0.2, 0.6]]))


def random_model(rng: np.random.Generator, max_data: int = 4, max_param: int = 4, max_focal: int = 3) -> CredalModel:
    data = Frame(tuple(f"y{i}" for i in range(int(rng.integers(1, max_data + 1)))))
    param = Frame(tuple(f"t{i}" for i in range(int(rng.integers(1, max_param + 1)))))
    table = rng.random((data.size, param.size)) + 0.01
    table /= table.sum(axis=0)
    count = min(int(rng.integers(1, max_focal + 1)), param.full_mask)
    masks = rng.choice(np.arange(1, param.full_mask + 1), size=count, replace=False)
    weights = rng.random(count) + 0.05
    prior = MassFunction.from_pairs(param, [(int(m), w) for m, w in zip(masks, weights)], renormalize=True)
    return CredalModel(Likelihood(data, param, table), prior)


class LikelihoodTests(unittest.TestCase):
    def test_columns_must_be_distributions(self):
        with self.assertRaises(ModelShapeError):
            Likelihood(DATA, THETA, np.array([[0.8, 0.4], [0.3, 0.6]]))
        with self.assertRaises(ModelShapeError):
            Likelihood(DATA, THETA, np.array([[1.0, 1.0]]))

    def test_lookup_by_label(self):
        self.assertAlmostEqual(TWO_POINT.probability("y1", "t2"), 0.4)
        np.testing.assert_allclose(TWO_POINT.column("t1"), [0.8, 0.2])

    def test_prior_must_live_on_the_parameter_frame(self):
        with self.assertRaises(FrameMismatchError):
            CredalModel(TWO_POINT, MassFunction.vacuous(DATA))


class JointPrevisionTests(unittest.TestCase):
    def test_vacuous_prior_gives_infimum_over_hypothesis(self):
        model = CredalModel(TWO_POINT, MassFunction.vacuous(THETA))
        f = JointGamble.rectangle(model, DATA.singleton("y1"), THETA.full())
        self.assertAlmostEqual(joint_lower_prevision(model, f), 0.4)
        self.assertAlmostEqual(joint_upper_prevision(model, f), 0.8)
        proper = JointGamble.rectangle(model, DATA.full(), THETA.singleton("t1"))
        self.assertAlmostEqual(joint_lower_prevision(model, proper), 0.0)

    def test_point_mass_prior_is_a_precise_expectation(self):
        model = CredalModel(TWO_POINT, MassFunction.point_mass(THETA, "t2"))
        f = JointGamble(np.array([[1.0, 3.0], [-1.0, 2.0]]))
        self.assertAlmostEqual(joint_lower_prevision(model, f), 0.4 * 3.0 + 0.6 * 2.0)
        self.assertAlmostEqual(joint_upper_prevision(model, f), 0.4 * 3.0 + 0.6 * 2.0)

    def test_constants_and_conjugacy(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            model = random_model(rng)
            c = JointGamble.constant(model, 0.37)
            self.assertAlmostEqual(joint_lower_prevision(model, c), 0.37)
            f = JointGamble(rng.normal(size=(model.data_frame.size, model.param_frame.size)))
            self.assertAlmostEqual(joint_upper_prevision(model, f), -joint_lower_prevision(model, -f), delta=1e-12)

    def test_slice_indicator_under_vacuous_prior_takes_the_max(self):
        model = CredalModel(TWO_POINT, MassFunction.vacuous(THETA))
        f = JointGamble.rectangle(model, DATA.singleton("y1"), THETA.singleton("t1"))
        self.assertAlmostEqual(joint_upper_prevision(model, f), 0.8)

    def test_shape_mismatch(self):
        model = CredalModel(TWO_POINT, MassFunction.vacuous(THETA))
        with self.assertRaises(ModelShapeError):
            joint_lower_prevision(model, JointGamble(np.zeros((3, 2))))

    def test_choquet_matches_vertex_minimum(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            model = random_model(rng)
            f = JointGamble(rng.normal(size=(model.data_frame.size, model.param_frame.size)))
            per_theta = (model.likelihood.table * f.values).sum(axis=0)
            brute = min(vertex.probabilities @ per_theta for vertex in prior_vertices(model.prior))
            self.assertAlmostEqual(joint_lower_prevision(model, f), brute, delta=1e-12)


class PriorVertexTests(unittest.TestCase):
    def test_point_mass_has_one_vertex(self):
        vertices = prior_vertices(MassFunction.point_mass(THETA, "t1"))
        self.assertEqual(len(vertices), 1)
        np.testing.assert_allclose(vertices[0].probabilities, [1.0, 0.0])

    def test_vacuous_vertices_are_dirac_measures(self):
        vertices = prior_vertices(MassFunction.vacuous(THETA))
        found = sorted(tuple(v.probabilities) for v in vertices)
        self.assertEqual(found, [(0.0, 1.0), (1.0, 0.0)])

    def test_nested_prior_vertices(self):
        prior = MassFunction.from_pairs(THETA, [("t1", 0.9), (["t1", "t2"], 0.1)])
        found = sorted(tuple(np.round(v.probabilities, 12)) for v in prior_vertices(prior))
        self.assertEqual(found, [(0.9, 0.1), (1.0, 0.0)])

    def test_vertices_dominate_belief(self):
        rng = np.random.default_rng(3)
        model = random_model(rng, max_param=4, max_focal=3)
        for vertex in prior_vertices(model.prior):
            self.assertAlmostEqual(vertex.probabilities.sum(), 1.0)
            for subset in model.param_frame.all_subsets():
                inside = sum(float(m) for mask, m in model.prior.focal if mask & subset.mask == mask)
                self.assertGreaterEqual(vertex.probabilities[list(subset.indices)].sum(), inside - 1e-12)

    def test_belief_table_sums_masses_of_contained_focal_sets(self):
        prior = MassFunction.from_pairs(THETA, [("t1", 0.9), (["t1", "t2"], 0.1)])
        np.testing.assert_allclose(prior_belief_table(prior), [0.0, 0.9, 0.0, 1.0])
        np.testing.assert_allclose(prior_belief_table(MassFunction.vacuous(THETA)), [0.0, 0.0, 0.0, 1.0])

    def test_vertex_cap(self):
        frame = Frame(tuple(f"t{i}" for i in range(4)))
        with self.assertRaises(VertexCapError):
            prior_vertices(MassFunction.vacuous(frame), cap=3)

    def test_least_favorable_vertex_minimizes_expectation(self):
        model = CredalModel(TWO_POINT, MassFunction.vacuous(THETA))
        f = JointGamble.rectangle(model, DATA.full(), THETA.singleton("t1"))
        vertex = least_favorable_vertex(model, f)
        np.testing.assert_allclose(vertex.probabilities, [0.0, 1.0])


class GeneralizedBayesTests(unittest.TestCase):
    def test_vacuous_prior_gives_vacuous_posterior(self):
        model = CredalModel(TWO_POINT, MassFunction.vacuous(THETA))
        indicator = Gamble.indicator(THETA.singleton("t1"))
        self.assertAlmostEqual(generalized_bayes_lower(model, "y1", indicator), 0.0)
        self.assertAlmostEqual(generalized_bayes_upper(model, "y1", indicator), 1.0)

    def test_precise_prior_reduces_to_bayes(self):
        model = CredalModel(TWO_POINT, MassFunction.from_probabilities(THETA, [0.5, 0.5]))
        indicator = Gamble.indicator(THETA.singleton("t1"))
        self.assertAlmostEqual(generalized_bayes_lower(model, "y1", indicator), 2 / 3, delta=1e-12)

    def test_nested_prior_takes_the_worst_vertex(self):
        prior = MassFunction.from_pairs(THETA, [("t1", 0.9), (["t1", "t2"], 0.1)])
        model = CredalModel(TWO_POINT, prior)
        indicator = Gamble.indicator(THETA.singleton("t1"))
        self.assertAlmostEqual(generalized_bayes_lower(model, "y1", indicator), 18 / 19, delta=1e-12)
        self.assertAlmostEqual(generalized_bayes_upper(model, "y1", indicator), 1.0, delta=1e-12)

    def test_zero_slice_probability_uses_vacuous_branch(self):
        likelihood = Likelihood(DATA, THETA, np.array([[1.0, 0.0], [0.0, 1.0]]))
        model = CredalModel(likelihood, MassFunction.vacuous(THETA))
        f = Gamble(THETA, (0.25, 0.75))
        self.assertAlmostEqual(generalized_bayes_lower(model, "y2", f), 0.25)
        im = generalized_bayes_im(model)
        self.assertTrue(any("vacuous posterior" in note for note in im.notes))

    def test_lower_never_exceeds_upper(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            model = random_model(rng)
            f = Gamble(model.param_frame, tuple(rng.normal(size=model.param_frame.size)))
            for y in model.data_frame.labels:
                self.assertLessEqual(
                    generalized_bayes_lower(model, y, f), generalized_bayes_upper(model, y, f) + 1e-12
                )

    def test_vertex_minimum_beats_random_mixtures(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            model = random_model(rng, max_param=3)
            f = Gamble(model.param_frame, tuple(rng.normal(size=model.param_frame.size)))
            vertices = np.array([v.probabilities for v in prior_vertices(model.prior)])
            for y in model.data_frame.labels:
                weights = model.likelihood.table[model.data_frame.index(y)]
                mixtures = rng.dirichlet(np.ones(len(vertices)), size=400) @ vertices
                joint = mixtures * weights
                ratios = (joint @ np.array(f.values)) / joint.sum(axis=1)
                lower = generalized_bayes_lower(model, y, f)
                self.assertLessEqual(lower, ratios.min() + 1e-9)


class GeneralizedBayesImTests(unittest.TestCase):
    def test_vacuous_prior_table_is_vacuous(self):
        im = generalized_bayes_im(CredalModel(TWO_POINT, MassFunction.vacuous(THETA)))
        np.testing.assert_allclose(im.lower[:, :-1], 0.0)
        np.testing.assert_allclose(im.lower[:, -1], 1.0)

    def test_precise_prior_matches_bayes_table(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            model = random_model(rng)
            probabilities = rng.dirichlet(np.ones(model.param_frame.size))
            precise = CredalModel(model.likelihood, MassFunction.from_probabilities(model.param_frame, probabilities))
            gb = generalized_bayes_im(precise)
            bayes = bayes_im(model.likelihood, probabilities / probabilities.sum())
            np.testing.assert_allclose(gb.lower, bayes.lower, atol=1e-12)

    def test_table_is_monotone_with_unit_full_frame(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            im = generalized_bayes_im(random_model(rng))
            np.testing.assert_array_equal(im.lower[:, -1], 1.0)
            self.assertTrue(np.all(im.lower <= im.upper + 1e-12))

    def test_subset_cap(self):
        frame = Frame(tuple(f"t{i}" for i in range(5)))
        data = Frame(("y",))
        model = CredalModel(Likelihood(data, frame, np.ones((1, 5))), MassFunction.vacuous(frame))
        with self.assertRaises(SubsetCapError):
            generalized_bayes_im(model, subset_cap=4)


class IMTableTests(unittest.TestCase):
    def test_rejects_non_monotone_rows(self):
        rows = np.array([[0.0, 0.6, 0.3, 1.0]])
        with self.assertRaises(IMTableError):
            IMTable(Frame(("y",)), THETA, np.array([[0.0, 0.6, 0.0, 0.5]]))
        closed = IMTable.from_rows(Frame(("y",)), THETA, rows)
        np.testing.assert_allclose(closed.lower, rows)

    def test_rejects_lower_above_upper(self):
        with self.assertRaises(IMTableError):
            IMTable(Frame(("y",)), THETA, np.array([[0.0, 0.7, 0.6, 1.0]]))

    def test_upper_by_conjugacy_and_lookup(self):
        im = IMTable(Frame(("y",)), THETA, np.array([[0.0, 0.6, 0.3, 1.0]]))
        self.assertAlmostEqual(im.upper_of("y", THETA.singleton("t1")), 0.7)
        self.assertAlmostEqual(im.lower_of("y", THETA.singleton("t2")), 0.3)
        self.assertEqual(im.hypothesis_label(0), "{}")
        self.assertEqual(im.hypothesis_label(3), "t1 t2")

    def test_bayes_table_is_precise(self):
        im = bayes_im(TWO_POINT, [0.5, 0.5])
        self.assertTrue(im.is_precise())
        self.assertAlmostEqual(im.lower_of("y1", THETA.singleton("t1")), 2 / 3)

    def test_membership_matrix_orientation(self):
        membership = membership_matrix(THETA)
        self.assertEqual(membership.shape, (2, 4))
        self.assertTrue(membership[0, 1])
        self.assertFalse(membership[1, 1])


if __name__ == "__main__":
    unittest.main()
