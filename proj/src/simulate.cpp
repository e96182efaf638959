#include "gpred/simulate.hpp"

#include "gpred/core.hpp"

#include <cmath>

namespace gpred {

void SimulationRecipe::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("SimulationRecipe: need n >= 1 and p >= 1");
  if (!(maf_low > 0.0 && maf_low <= maf_high && maf_high <= 0.5))
    throw std::invalid_argument("SimulationRecipe: maf_range must satisfy 0 < low <= high <= 0.5");
  if (!(sigma_e2 >= 0.0)) throw std::invalid_argument("SimulationRecipe: sigma_e2 must be >= 0");
  gpred::validate(prior);
}

GenotypeMatrix simulate_genotypes(Eigen::Index n, Eigen::Index p, double maf_low,
                                  double maf_high, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("simulate_genotypes: need n >= 1 and p >= 1");
  if (!(maf_low > 0.0 && maf_low <= maf_high && maf_high <= 0.5))
    throw std::invalid_argument("simulate_genotypes: maf_range must satisfy 0 < low <= high <= 0.5");
  GenotypeMatrix W;
  W.codes.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Rng rng = substream(seed, stream::kGenotypeColumn, static_cast<std::uint64_t>(j));
    const double freq = rng.uniform(maf_low, maf_high);
    for (Eigen::Index i = 0; i < n; ++i)
      W.codes(i, j) = static_cast<double>(rng.binomial2(freq));
  }
  W.marker_ids.resize(static_cast<size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) W.marker_ids[static_cast<size_t>(j)] = "m" + std::to_string(j + 1);
  W.individual_ids.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    W.individual_ids[static_cast<size_t>(i)] = "ind" + std::to_string(i + 1);
  return W;
}

Vector simulate_effects(Eigen::Index p, const EffectPrior& prior, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("simulate_effects: need p >= 1");
  gpred::validate(prior);
  Rng rng = substream(seed, stream::kEffects, 0);
  Vector b(p);
  std::visit(
      [&](const auto& pr) {
        using T = std::decay_t<decltype(pr)>;
        if constexpr (std::is_same_v<T, NormalPrior>) {
          const double sd = std::sqrt(pr.sigma_b2);
          for (Eigen::Index j = 0; j < p; ++j) b[j] = sd * rng.normal();
        } else if constexpr (std::is_same_v<T, ScaledInvChiSqPrior>) {
          for (Eigen::Index j = 0; j < p; ++j)
            b[j] = std::sqrt(rng.scaled_inv_chi2(pr.df, pr.scale)) * rng.normal();
        } else {
          for (Eigen::Index j = 0; j < p; ++j) {
            if (rng.bernoulli(pr.q))
              b[j] = std::sqrt(rng.scaled_inv_chi2(pr.df, pr.scale)) * rng.normal();
            else
              b[j] = 0.0;
          }
        }
      },
      prior);
  return b;
}

SimulatedDataset simulate_phenotypes(const GenotypeMatrix& W, const Vector& b_true,
                                     const Matrix& X, const Vector& c_true,
                                     double sigma_e2, std::uint64_t seed) {
  if (b_true.size() != W.p())
    throw std::invalid_argument("simulate_phenotypes: effect vector length != marker count");
  if (X.cols() != c_true.size())
    throw std::invalid_argument("simulate_phenotypes: fixed design columns != coefficient count");
  if (X.cols() > 0 && X.rows() != W.n())
    throw std::invalid_argument("simulate_phenotypes: fixed design rows != individual count");
  if (!(sigma_e2 >= 0.0)) throw std::invalid_argument("simulate_phenotypes: sigma_e2 must be >= 0");

  SimulatedDataset data;
  data.W = W;
  data.b_true = b_true;
  data.X = X;
  data.c_true = c_true;
  data.g_true.noalias() = impute_missing(W) * b_true;

  Rng rng = substream(seed, stream::kResidual, 0);
  const double sd = std::sqrt(sigma_e2);
  data.e.resize(W.n());
  for (Eigen::Index i = 0; i < W.n(); ++i) data.e[i] = sd * rng.normal();

  if (X.cols() > 0)
    data.y.y = X * c_true + data.g_true + data.e;  // the documented order, bitwise
  else
    data.y.y = data.g_true + data.e;
  data.y.ids = W.individual_ids;
  return data;
}

SimulatedDataset simulate_dataset(const SimulationRecipe& recipe) {
  recipe.validate();
  GenotypeMatrix W =
      simulate_genotypes(recipe.n, recipe.p, recipe.maf_low, recipe.maf_high, recipe.seed);
  const Vector b = simulate_effects(recipe.p, recipe.prior, recipe.seed);
  Matrix X(recipe.n, recipe.fixed_effects.size());
  if (X.cols() > 0) {
    Rng rng = substream(recipe.seed, stream::kFixedDesign, 0);
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = rng.normal();
  }
  return simulate_phenotypes(W, b, X, recipe.fixed_effects, recipe.sigma_e2, recipe.seed);
}

SireFamilyData simulate_sire_families(int f, const std::vector<int>& family_sizes,
                                      double sigma_s2, double sigma_e2, std::uint64_t seed) {
  if (f < 1) throw std::invalid_argument("simulate_sire_families: need f >= 1");
  if (static_cast<int>(family_sizes.size()) != f)
    throw std::invalid_argument("simulate_sire_families: family size count != f");
  for (int sz : family_sizes)
    if (sz < 0) throw std::invalid_argument("simulate_sire_families: negative family size");
  if (!(sigma_s2 >= 0.0) || !(sigma_e2 >= 0.0))
    throw std::invalid_argument("simulate_sire_families: variances must be >= 0");

  Eigen::Index n = 0;
  for (int sz : family_sizes) n += sz;

  SireFamilyData data;
  data.s_true.resize(f);
  Rng sire_rng = substream(seed, stream::kSireEffects, 0);
  const double sire_sd = std::sqrt(sigma_s2);
  for (int i = 0; i < f; ++i) data.s_true[i] = sire_sd * sire_rng.normal();

  data.y.resize(n);
  data.families.level.resize(n);
  data.families.levels = f;
  Rng res_rng = substream(seed, stream::kResidual, 0);
  const double res_sd = std::sqrt(sigma_e2);
  Eigen::Index row = 0;
  for (int i = 0; i < f; ++i) {
    for (int k = 0; k < family_sizes[i]; ++k, ++row) {
      data.families.level[row] = i;
      data.y[row] = data.s_true[i] + res_sd * res_rng.normal();
    }
  }
  return data;
}

MarkerScanData simulate_marker_scan(Eigen::Index n_markers, double sigma_b2,
                                    double sigma_err2, std::uint64_t seed) {
  if (n_markers < 1) throw std::invalid_argument("simulate_marker_scan: need >= 1 marker");
  if (!(sigma_b2 >= 0.0) || !(sigma_err2 >= 0.0))
    throw std::invalid_argument("simulate_marker_scan: variances must be >= 0");
  MarkerScanData data;
  data.b_true.resize(n_markers);
  data.b_tilde.resize(n_markers);
  Rng rng = substream(seed, stream::kMarkerScan, 0);
  const double b_sd = std::sqrt(sigma_b2);
  const double e_sd = std::sqrt(sigma_err2);
  for (Eigen::Index j = 0; j < n_markers; ++j) {
    data.b_true[j] = b_sd * rng.normal();
    data.b_tilde[j] = data.b_true[j] + e_sd * rng.normal();
  }
  return data;
}

}  // namespace gpred
