#pragma once

// Accuracy, calibration, and selection-bias metrics, plus the two
// selection experiments that contrast least-squares and posterior-mean
// estimators, and k-fold cross-validation.

#include "gpred/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace gpred {

// Undefined statistics are NaN with defined=false (constant prediction).
struct AccuracyReport {
  double correlation = 0.0;
  double slope = 0.0;  // regression of truth on prediction
  double mse = 0.0;
  Eigen::Index n = 0;
  bool defined = true;
};

AccuracyReport accuracy_report(const Vector& truth, const Vector& prediction);

struct TruncationResult {
  double mc_mean;        // mean estimate among selected replicates; NaN if none
  double analytic_mean;  // b + se * phi(a)/(1 - Phi(a)), a = (threshold - b)/se
  long selected = 0;
  long replicates = 0;
};

// Repeatedly draws one estimate b_hat = b + N(0, se^2) and averages those
// exceeding the threshold — the winner's-curse experiment in one dimension.
TruncationResult truncation_experiment(double b_fixed, double se, double threshold,
                                       long replicates, std::uint64_t seed);

struct SelectionBiasReport {
  double threshold = 0.0;
  long count = 0;
  double mean_abs_estimate;  // NaN when count == 0
  double mean_abs_truth;
  double slope;     // truth on estimate within the selected set
  double slope_se;  // OLS standard error of that slope
};

// Selects |estimate| > threshold (or estimate > threshold one-sided) and
// reports how the estimates relate to the truth inside the selected set.
SelectionBiasReport selection_bias_report(const Vector& b_true, const Vector& estimates,
                                          double threshold, bool two_sided = true);

// Train on the kept folds, return predictions for the held-out rows.
using FitPredict = std::function<Vector(const Matrix& W_train, const FixedDesign& X_train,
                                        const Vector& y_train, const Matrix& W_test,
                                        const FixedDesign& X_test)>;

struct CrossValidationResult {
  std::vector<AccuracyReport> folds;
  AccuracyReport pooled;
  std::vector<int> fold_of;  // partition: fold index per row
  Vector predictions;        // held-out prediction per row
};

CrossValidationResult cross_validate(const Matrix& W, const FixedDesign& X, const Vector& y,
                                     const FitPredict& method, int folds, std::uint64_t seed);

struct EquivalenceReport {
  double max_abs_diff = 0.0;
  double mean_abs_diff = 0.0;
  bool pass = false;
};

// Compares the fitted genetic values of two fits on the same individuals.
EquivalenceReport estimator_equivalence(const ModelFit& fit_a, const ModelFit& fit_b,
                                        double tolerance);

}  // namespace gpred
