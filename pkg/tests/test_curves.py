from __future__ import annotations

import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from im_auditor.curves import (
    CURVE_COLUMNS,
    CurveFormatError,
    build_curve_frame,
    curve_filename,
    interval_summary,
    max_curve_gap,
    read_curve_csv,
    theta_grid,
    write_curve_csv,
)
from im_auditor.randomset import CombinedIM, IntervalPrior

HALF_LINE = IntervalPrior.half_line(7.0, 0.9)


class ThetaGridTests(unittest.TestCase):
    def test_grid_endpoints_and_single_point(self):
        grid = theta_grid(1.0, 9.0, 81)
        self.assertEqual(len(grid), 81)
        self.assertEqual((grid[0], grid[-1]), (1.0, 9.0))
        np.testing.assert_array_equal(theta_grid(3.0, 3.0, 1), [3.0])

    def test_rejects_empty_and_reversed_grids(self):
        with self.assertRaises(ValueError):
            theta_grid(0.0, 1.0, 0)
        with self.assertRaises(ValueError):
            theta_grid(2.0, 1.0, 5)


class CurveFrameTests(unittest.TestCase):
    def test_vacuous_prior_curves_coincide(self):
        frame, worst = build_curve_frame(IntervalPrior.vacuous(), 6.5, theta_grid(2.5, 10.5, 33))
        self.assertIsNone(worst)
        self.assertEqual(list(frame.columns), CURVE_COLUMNS)
        np.testing.assert_allclose(frame["lower_combined"], frame["lower_vacuous"], atol=1e-12)
        np.testing.assert_allclose(frame["upper_combined"], frame["upper_vacuous"], atol=1e-12)
        self.assertLess(max_curve_gap(frame), 1e-12)

    def test_vacuous_columns_follow_the_normal_radius(self):
        frame, _ = build_curve_frame(HALF_LINE, 5.0, [4.0, 5.0, 6.5])
        expected_lower = [max(math.erf((theta - 5.0) / math.sqrt(2.0)), 0.0) for theta in (4.0, 5.0, 6.5)]
        np.testing.assert_allclose(frame["lower_vacuous"], expected_lower, atol=1e-12)
        self.assertAlmostEqual(frame["upper_vacuous"].iloc[1], 1.0)

    def test_single_point_grid_gives_one_row(self):
        frame, _ = build_curve_frame(HALF_LINE, 7.5, theta_grid(7.0, 7.0, 1))
        self.assertEqual(len(frame), 1)
        row = frame.iloc[0]
        self.assertLessEqual(row["lower_combined"], row["upper_combined"])

    def test_far_below_the_cut_the_prior_barely_moves_the_curves(self):
        frame, _ = build_curve_frame(HALF_LINE, 5.0, theta_grid(1.0, 9.0, 81))
        self.assertLess(max_curve_gap(frame), 0.05)

    def test_sampled_curves_are_monotone_and_report_their_error(self):
        mc = CombinedIM(HALF_LINE, samples=20_000, seed=3)
        frame, worst = build_curve_frame(HALF_LINE, 7.5, theta_grid(4.0, 11.0, 15), mc=mc)
        self.assertGreater(worst, 0.0)
        self.assertTrue(np.all(np.diff(frame["lower_combined"]) >= 0))
        self.assertTrue(np.all(np.diff(frame["upper_combined"]) >= 0))
        self.assertTrue(np.all(frame["lower_combined"] <= frame["upper_combined"]))

    def test_filename_uses_compact_y(self):
        self.assertEqual(curve_filename(7.5), "curve-y7.5.csv")
        self.assertEqual(curve_filename(9.0), "curve-y9.csv")


class CurveFileTests(unittest.TestCase):
    def test_written_curve_reads_back(self):
        frame, _ = build_curve_frame(HALF_LINE, 9.0, theta_grid(5.0, 13.0, 17))
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / curve_filename(9.0)
            write_curve_csv(frame, path)
            again = read_curve_csv(path)
        np.testing.assert_allclose(again.to_numpy(), frame.to_numpy(), atol=1e-11)

    def test_rejects_malformed_curves(self):
        good = {name: [0.1, 0.2] for name in CURVE_COLUMNS}
        good["theta"] = [1.0, 2.0]
        cases = {
            "columns": pd.DataFrame({"theta": [1.0], "cdf": [0.5]}),
            "order": pd.DataFrame({**good, "theta": [2.0, 1.0]}),
            "range": pd.DataFrame({**good, "lower_vacuous": [0.1, 1.5]}),
            "missing": pd.DataFrame({**good, "upper_combined": [0.3, None]}),
        }
        with tempfile.TemporaryDirectory() as tmpdir:
            for name, frame in cases.items():
                with self.subTest(case=name):
                    path = Path(tmpdir) / f"{name}.csv"
                    frame.to_csv(path, index=False)
                    with self.assertRaises(CurveFormatError):
                        read_curve_csv(path)


class IntervalSummaryTests(unittest.TestCase):
    def test_summary_compares_vacuous_and_combined(self):
        summary = interval_summary(HALF_LINE, 9.0, 0.95)
        self.assertEqual((summary["y"], summary["level"]), (9.0, 0.95))
        for key in ("vacuous", "combined"):
            part = summary[key]
            self.assertAlmostEqual(part["length"], part["upper"] - part["lower"])
        self.assertGreater(summary["combined"]["length"], summary["vacuous"]["length"])
        self.assertGreaterEqual(summary["combined"]["length"], 4.7)
        self.assertLessEqual(summary["combined"]["length"], 5.3)


if __name__ == "__main__":
    unittest.main()
