#include "gpred/evaluate.hpp"

#include "gpred/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gpred {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310005024;  // sqrt(2*pi)
}
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct SlopeFit {
  double slope = kNaN;
  double se = kNaN;
  bool defined = false;
};

// OLS of t on e with intercept.
SlopeFit slope_of(const Vector& t, const Vector& e) {
  SlopeFit out;
  const Eigen::Index k = t.size();
  if (k < 2) return out;
  const double em = e.mean();
  const double tm = t.mean();
  const double sxx = (e.array() - em).square().sum();
  if (sxx <= 0.0) return out;
  const double sxy = ((e.array() - em) * (t.array() - tm)).sum();
  out.slope = sxy / sxx;
  out.defined = true;
  if (k > 2) {
    const double rss =
        (t.array() - tm - out.slope * (e.array() - em)).square().sum();
    out.se = std::sqrt(std::max(0.0, rss) / static_cast<double>(k - 2) / sxx);
  }
  return out;
}

}  // namespace

AccuracyReport accuracy_report(const Vector& truth, const Vector& prediction) {
  if (truth.size() != prediction.size())
    throw std::invalid_argument("accuracy_report: length mismatch");
  if (truth.size() < 2) throw std::invalid_argument("accuracy_report: need n >= 2");
  AccuracyReport rep;
  rep.n = truth.size();
  rep.mse = (truth - prediction).squaredNorm() / static_cast<double>(rep.n);
  const double pm = prediction.mean();
  const double tm = truth.mean();
  const double spp = (prediction.array() - pm).square().sum();
  const double stt = (truth.array() - tm).square().sum();
  if (spp <= 0.0 || stt <= 0.0) {
    rep.defined = false;
    rep.correlation = kNaN;
    rep.slope = kNaN;
    return rep;
  }
  const double spt = ((prediction.array() - pm) * (truth.array() - tm)).sum();
  rep.correlation = spt / std::sqrt(spp * stt);
  rep.slope = spt / spp;
  return rep;
}

TruncationResult truncation_experiment(double b_fixed, double se, double threshold,
                                       long replicates, std::uint64_t seed) {
  if (!(se > 0.0)) throw std::invalid_argument("truncation_experiment: se must be > 0");
  if (replicates < 1) throw std::invalid_argument("truncation_experiment: replicates must be >= 1");
  TruncationResult out;
  out.replicates = replicates;
  double sum = 0.0;
  for (long r = 0; r < replicates; ++r) {
    Rng rng = substream(seed, stream::kReplicate, static_cast<std::uint64_t>(r));
    const double est = b_fixed + se * rng.normal();
    if (est > threshold) {
      sum += est;
      ++out.selected;
    }
  }
  out.mc_mean = out.selected > 0 ? sum / static_cast<double>(out.selected) : kNaN;
  const double a = (threshold - b_fixed) / se;
  const double tail = 1.0 - normal_cdf(a);
  out.analytic_mean = tail > 0.0 ? b_fixed + se * normal_pdf(a) / tail
                                 : std::numeric_limits<double>::infinity();
  return out;
}

SelectionBiasReport selection_bias_report(const Vector& b_true, const Vector& estimates,
                                          double threshold, bool two_sided) {
  if (b_true.size() != estimates.size())
    throw std::invalid_argument("selection_bias_report: length mismatch");
  if (two_sided && threshold < 0.0)
    throw std::invalid_argument("selection_bias_report: two-sided threshold must be >= 0");
  SelectionBiasReport rep;
  rep.threshold = threshold;
  std::vector<Eigen::Index> sel;
  for (Eigen::Index j = 0; j < estimates.size(); ++j) {
    const double e = estimates[j];
    if (two_sided ? std::abs(e) > threshold : e > threshold) sel.push_back(j);
  }
  rep.count = static_cast<long>(sel.size());
  if (sel.empty()) {
    rep.mean_abs_estimate = rep.mean_abs_truth = rep.slope = rep.slope_se = kNaN;
    return rep;
  }
  Vector t(rep.count), e(rep.count);
  for (size_t k = 0; k < sel.size(); ++k) {
    t[static_cast<Eigen::Index>(k)] = b_true[sel[k]];
    e[static_cast<Eigen::Index>(k)] = estimates[sel[k]];
  }
  rep.mean_abs_estimate = e.cwiseAbs().mean();
  rep.mean_abs_truth = t.cwiseAbs().mean();
  const SlopeFit fit = slope_of(t, e);
  rep.slope = fit.slope;
  rep.slope_se = fit.se;
  return rep;
}

CrossValidationResult cross_validate(const Matrix& W, const FixedDesign& X, const Vector& y,
                                     const FitPredict& method, int folds, std::uint64_t seed) {
  const Eigen::Index n = W.rows();
  if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
  if (n < folds) throw std::invalid_argument("cross_validate: fewer rows than folds");
  if (y.size() != n) throw std::invalid_argument("cross_validate: y length mismatch");
  const Eigen::Index c = X.c();
  if (c > 0 && X.n() != n) throw std::invalid_argument("cross_validate: fixed design mismatch");

  // Shuffle once, deal round-robin: a seed-deterministic partition.
  std::vector<Eigen::Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng = substream(seed, stream::kFolds, 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  CrossValidationResult out;
  out.fold_of.assign(static_cast<size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    out.fold_of[static_cast<size_t>(perm[static_cast<size_t>(i)])] = static_cast<int>(i % folds);

  out.predictions = Vector::Zero(n);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i)
      (out.fold_of[static_cast<size_t>(i)] == f ? test : train).push_back(i);
    Matrix Wtr(train.size(), W.cols()), Wte(test.size(), W.cols());
    Matrix Xtr(train.size(), c), Xte(test.size(), c);
    Vector ytr(train.size()), yte(test.size());
    for (size_t k = 0; k < train.size(); ++k) {
      Wtr.row(static_cast<Eigen::Index>(k)) = W.row(train[k]);
      if (c > 0) Xtr.row(static_cast<Eigen::Index>(k)) = X.X.row(train[k]);
      ytr[static_cast<Eigen::Index>(k)] = y[train[k]];
    }
    for (size_t k = 0; k < test.size(); ++k) {
      Wte.row(static_cast<Eigen::Index>(k)) = W.row(test[k]);
      if (c > 0) Xte.row(static_cast<Eigen::Index>(k)) = X.X.row(test[k]);
      yte[static_cast<Eigen::Index>(k)] = y[test[k]];
    }
    Vector pred;
    try {
      pred = method(Wtr, FixedDesign{Xtr}, ytr, Wte, FixedDesign{Xte});
    } catch (const std::exception& e) {
      throw std::runtime_error("cross_validate: method failed on fold " + std::to_string(f) +
                               ": " + e.what());
    }
    if (pred.size() != static_cast<Eigen::Index>(test.size()))
      throw std::runtime_error("cross_validate: method returned wrong-size prediction on fold " +
                               std::to_string(f));
    for (size_t k = 0; k < test.size(); ++k)
      out.predictions[test[k]] = pred[static_cast<Eigen::Index>(k)];
    out.folds.push_back(accuracy_report(yte, pred));
  }
  out.pooled = accuracy_report(y, out.predictions);
  return out;
}

EquivalenceReport estimator_equivalence(const ModelFit& fit_a, const ModelFit& fit_b,
                                        double tolerance) {
  const Vector& ga = fit_a.fitted_genetic_values;
  const Vector& gb = fit_b.fitted_genetic_values;
  if (ga.size() == 0 || gb.size() == 0)
    throw std::invalid_argument("estimator_equivalence: a fit has no fitted genetic values");
  if (ga.size() != gb.size())
    throw std::invalid_argument("estimator_equivalence: fits cover different individual counts");
  if (!fit_a.individual_ids.empty() && !fit_b.individual_ids.empty() &&
      fit_a.individual_ids != fit_b.individual_ids)
    throw std::invalid_argument("estimator_equivalence: fits cover different individuals");
  EquivalenceReport rep;
  const Vector diff = (ga - gb).cwiseAbs();
  rep.max_abs_diff = diff.maxCoeff();
  rep.mean_abs_diff = diff.mean();
  rep.pass = rep.max_abs_diff <= tolerance;
  return rep;
}

}  // namespace gpred
