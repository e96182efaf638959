#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpred/blup.hpp"
#include "gpred/evaluate.hpp"
#include "gpred/rng.hpp"
#include "gpred/simulate.hpp"
#include "oracles.hpp"

#include <cmath>
#include <set>

using namespace gpred;

TEST_CASE("accuracy report on exact and inverted predictions") {
  Vector t(5);
  t << 1, 2, 3, 4, 5;
  const AccuracyReport same = accuracy_report(t, t);
  CHECK(same.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.mse < 1e-14);
  CHECK(same.n == 5);
  CHECK(same.defined);

  const AccuracyReport flipped = accuracy_report(t, (-t).eval());
  CHECK(flipped.correlation == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(flipped.slope == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("accuracy report slope is truth on prediction") {
  // truth = 2 * prediction exactly: slope must be 2, not 0.5.
  Vector pred(4);
  pred << 1, 2, 3, 4;
  const AccuracyReport r = accuracy_report((2.0 * pred).eval(), pred);
  CHECK(r.slope == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("accuracy report with a constant prediction is undefined") {
  Vector t(3);
  t << 1, 2, 3;
  const AccuracyReport r = accuracy_report(t, Vector::Ones(3));
  CHECK_FALSE(r.defined);
  CHECK(std::isnan(r.correlation));
  CHECK(std::isnan(r.slope));
  CHECK(std::isfinite(r.mse));  // mse stays defined

  CHECK_THROWS_AS(accuracy_report(t, Vector::Ones(4)), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_report(Vector(1), Vector(1)), std::invalid_argument);
}

TEST_CASE("truncation experiment with no effective selection recovers b") {
  const TruncationResult r = truncation_experiment(1.0, 1.0, -1e9, 50000, 7);
  CHECK(r.selected == r.replicates);
  CHECK(r.mc_mean == doctest::Approx(1.0).epsilon(0.02));
  // The analytic truncated mean collapses to b as the threshold vanishes.
  CHECK(r.analytic_mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("truncation experiment matches the closed form") {
  const TruncationResult r = truncation_experiment(1.0, 1.0, 2.0, 200000, 8);
  // phi(1)/(1-Phi(1)) = 1.5251352761609810 on top of b = 1.
  CHECK(r.analytic_mean == doctest::Approx(2.5251352761609810).epsilon(1e-12));
  const double sd_sel = 0.5; // truncated-normal sd is below the parent sd
  CHECK(std::abs(r.mc_mean - r.analytic_mean) <
        4.0 * sd_sel / std::sqrt(static_cast<double>(r.selected)));
  // Roughly 15.9% of draws clear the threshold.
  CHECK(static_cast<double>(r.selected) / static_cast<double>(r.replicates) ==
        doctest::Approx(0.1587).epsilon(0.05));
}

TEST_CASE("truncation error shrinks like one over root replicates") {
  // At every size the MC error stays inside a constant * 1/sqrt(selected)
  // envelope, the defining property of the rate.
  for (long reps : {2000L, 32000L, 512000L}) {
    const TruncationResult r = truncation_experiment(0.5, 2.0, 3.0, reps, 9);
    const double sd_sel = 2.0;  // selected-tail sd is below the parent se
    CHECK(std::abs(r.mc_mean - r.analytic_mean) <
          4.0 * sd_sel / std::sqrt(static_cast<double>(r.selected)));
  }
}

TEST_CASE("truncation experiment input checks and empty selection") {
  CHECK_THROWS_AS(truncation_experiment(1.0, -1.0, 2.0, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(truncation_experiment(1.0, 1.0, 2.0, 0, 1), std::invalid_argument);
  const TruncationResult none = truncation_experiment(0.0, 0.1, 50.0, 200, 2);
  CHECK(none.selected == 0);
  CHECK(std::isnan(none.mc_mean));
}

TEST_CASE("selection bias report when the estimator equals the truth") {
  // A perfect estimator shows no winner's curse at any threshold.
  const MarkerScanData scan = simulate_marker_scan(20000, 1.0, 0.5, 11);
  for (double thr : {0.0, 0.5, 1.5}) {
    const SelectionBiasReport r = selection_bias_report(scan.b_true, scan.b_true, thr);
    CHECK(r.count > 100);
    CHECK(r.mean_abs_estimate == doctest::Approx(r.mean_abs_truth).epsilon(1e-12));
    CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.threshold == thr);
  }
}

TEST_CASE("selection bias report exposes the winner's curse on raw estimates") {
  const MarkerScanData scan = simulate_marker_scan(50000, 0.5, 0.5, 12);
  const SelectionBiasReport raw = selection_bias_report(scan.b_true, scan.b_tilde, 2.0);
  REQUIRE(raw.count > 100);
  // Selected raw estimates overstate the truth; the slope is about 0.5.
  CHECK(raw.mean_abs_estimate > 1.3 * raw.mean_abs_truth);
  CHECK(raw.slope == doctest::Approx(0.5).epsilon(0.25));

  // The shrunk estimator restores calibration on the same selected set.
  const Vector shrunk = shrink_ls(scan.b_tilde, 1.0);
  const SelectionBiasReport cal = selection_bias_report(scan.b_true, shrunk, 1.0);
  REQUIRE(cal.count > 100);
  CHECK(std::abs(cal.slope - 1.0) < 3.0 * cal.slope_se);
  CHECK(std::abs(cal.mean_abs_estimate - cal.mean_abs_truth) < 0.05);
}

TEST_CASE("selection bias report one-sided mode and empty set") {
  Vector truth(4), est(4);
  truth << 1, -1, 2, -2;
  est << 1.5, -1.5, 2.5, -2.5;
  const SelectionBiasReport two = selection_bias_report(truth, est, 1.2, true);
  CHECK(two.count == 4);
  const SelectionBiasReport one = selection_bias_report(truth, est, 1.2, false);
  CHECK(one.count == 2);  // only the positive tail

  const SelectionBiasReport empty = selection_bias_report(truth, est, 10.0);
  CHECK(empty.count == 0);
  CHECK(std::isnan(empty.mean_abs_estimate));
  CHECK(std::isnan(empty.slope));

  CHECK_THROWS_AS(selection_bias_report(truth, Vector::Ones(3), 1.0), std::invalid_argument);
}

TEST_CASE("cross validation partition is balanced, exhaustive, and seeded") {
  Rng rng(13);
  const Eigen::Index n = 103;
  Matrix W(n, 2);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    W(i, 0) = rng.normal();
    W(i, 1) = rng.normal();
    y[i] = rng.normal();
  }
  auto zero_method = [](const Matrix&, const FixedDesign&, const Vector&, const Matrix& Wte,
                        const FixedDesign&) { return Vector::Zero(Wte.rows()).eval(); };

  const CrossValidationResult cv = cross_validate(W, FixedDesign::none(n), y, zero_method, 5, 21);
  REQUIRE(cv.fold_of.size() == static_cast<size_t>(n));
  std::vector<int> sizes(5, 0);
  for (int f : cv.fold_of) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++sizes[static_cast<size_t>(f)];
  }
  for (int s : sizes) CHECK(std::abs(s - 103 / 5) <= 1);

  const CrossValidationResult again =
      cross_validate(W, FixedDesign::none(n), y, zero_method, 5, 21);
  CHECK(again.fold_of == cv.fold_of);
  const CrossValidationResult moved =
      cross_validate(W, FixedDesign::none(n), y, zero_method, 5, 22);
  CHECK(moved.fold_of != cv.fold_of);

  // The all-zero method has undefined correlation but a well-defined MSE:
  // the mean square of y itself.
  CHECK_FALSE(cv.pooled.defined);
  CHECK(cv.pooled.mse == doctest::Approx(y.squaredNorm() / n).epsilon(1e-12));
}

TEST_CASE("cross validation with an oracle method is perfect") {
  // Smuggle y through the design so the method can return the held-out
  // truth; predictions then match y exactly in every fold.
  Rng rng(14);
  const Eigen::Index n = 60;
  Matrix W(n, 1);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = rng.normal();
    W(i, 0) = y[i];
  }
  auto oracle_method = [](const Matrix&, const FixedDesign&, const Vector&, const Matrix& Wte,
                          const FixedDesign&) { return Wte.col(0).eval(); };
  const CrossValidationResult cv =
      cross_validate(W, FixedDesign::none(n), y, oracle_method, 4, 15);
  CHECK(cv.pooled.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cv.pooled.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cv.pooled.mse < 1e-20);
  CHECK((cv.predictions - y).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& fold : cv.folds) CHECK(fold.correlation == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cross validation recovers prediction slope 1 for a matched ridge") {
  SimulationRecipe recipe;
  recipe.n = 400;
  recipe.p = 300;
  recipe.prior = NormalPrior{1.0 / 100.0};
  recipe.sigma_e2 = 1.0;
  recipe.seed = 16;
  const SimulatedDataset d = simulate_dataset(recipe);

  auto ridge = [&](const Matrix& Wtr, const FixedDesign& Xtr, const Vector& ytr,
                   const Matrix& Wte, const FixedDesign& Xte) {
    const ModelFit fit = snp_blup(Wtr, Xtr, ytr, VarianceComponents{1.0, 1.0 / 100.0});
    return predict(fit, Wte, {}, Xte).y;
  };
  const CrossValidationResult cv =
      cross_validate(d.W.codes, FixedDesign::intercept(400), d.y.y, ridge, 5, 17);
  CHECK(cv.pooled.defined);
  CHECK(cv.pooled.correlation > 0.3);
  CHECK(cv.pooled.slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("cross validation errors name the failing fold") {
  Matrix W = Matrix::Ones(20, 1);
  Vector y = Vector::Ones(20);
  int call = 0;
  auto flaky = [&call](const Matrix&, const FixedDesign&, const Vector&, const Matrix& Wte,
                       const FixedDesign&) -> Vector {
    if (++call == 3) throw std::runtime_error("boom");
    return Vector::Zero(Wte.rows());
  };
  CHECK_THROWS_WITH_AS(cross_validate(W, FixedDesign::none(20), y, flaky, 4, 18),
                       doctest::Contains("fold"), std::runtime_error);

  CHECK_THROWS_AS(cross_validate(W, FixedDesign::none(20), y, flaky, 1, 18),
                  std::invalid_argument);  // need >= 2 folds
  CHECK_THROWS_AS(cross_validate(W, FixedDesign::none(20), y, flaky, 21, 18),
                  std::invalid_argument);  // more folds than rows
}

TEST_CASE("estimator equivalence on identical and perturbed fits") {
  ModelFit a;
  a.method = "snp-blup";
  a.fitted_genetic_values = (Vector(3) << 1.0, 2.0, 3.0).finished();
  a.individual_ids = {"i1", "i2", "i3"};
  ModelFit b = a;
  b.method = "gblup";

  const EquivalenceReport same = estimator_equivalence(a, b, 1e-8);
  CHECK(same.pass);
  CHECK(same.max_abs_diff == 0.0);
  CHECK(same.mean_abs_diff == 0.0);

  b.fitted_genetic_values[2] += 1e-5;
  const EquivalenceReport off = estimator_equivalence(a, b, 1e-8);
  CHECK_FALSE(off.pass);
  CHECK(off.max_abs_diff == doctest::Approx(1e-5).epsilon(1e-6));

  b.individual_ids = {"i1", "i2", "zz"};
  CHECK_THROWS_AS(estimator_equivalence(a, b, 1e-8), std::invalid_argument);

  ModelFit c = a;
  c.fitted_genetic_values = Vector::Ones(2);
  c.individual_ids.clear();
  CHECK_THROWS_AS(estimator_equivalence(a, c, 1e-8), std::invalid_argument);
}

TEST_CASE("snp_blup and gblup are equivalent through the report") {
  SimulationRecipe recipe;
  recipe.n = 35;
  recipe.p = 80;
  recipe.prior = NormalPrior{0.03};
  recipe.seed = 19;
  const SimulatedDataset d = simulate_dataset(recipe);
  const FixedDesign X = FixedDesign::intercept(35);
  const VarianceComponents vc{1.0, 0.03};

  const ModelFit marker = snp_blup(d.W, X, d.y.y, vc);
  const ModelFit animal = gblup(genomic_relationship(d.W, false), X, d.y.y, vc);
  const EquivalenceReport r = estimator_equivalence(marker, animal, 1e-8);
  CHECK(r.pass);
  CHECK(r.max_abs_diff < 1e-8);

  // Negative control: a mismatched variance ratio separates the two fits.
  const ModelFit other = gblup(genomic_relationship(d.W, false), X, d.y.y,
                               VarianceComponents{1.0, 0.3});
  CHECK_FALSE(estimator_equivalence(marker, other, 1e-8).pass);
}
