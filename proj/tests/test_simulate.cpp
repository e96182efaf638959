#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpred/core.hpp"
#include "gpred/simulate.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace gpred;

TEST_CASE("simulated genotypes are valid codes with ids") {
  const GenotypeMatrix W = simulate_genotypes(40, 25, 0.1, 0.5, 3);
  CHECK_NOTHROW(W.validate());
  CHECK(W.n() == 40);
  CHECK(W.p() == 25);
  CHECK(W.marker_ids.size() == 25);
  CHECK(W.individual_ids.size() == 40);
  CHECK(W.marker_ids[0] == "m1");
  CHECK(W.individual_ids[39] == "ind40");
  for (Eigen::Index j = 0; j < W.p(); ++j)
    for (Eigen::Index i = 0; i < W.n(); ++i) {
      const double v = W.codes(i, j);
      REQUIRE((v == 0.0 || v == 1.0 || v == 2.0));
    }
}

TEST_CASE("same recipe reproduces the identical dataset bit for bit") {
  SimulationRecipe recipe;
  recipe.n = 30;
  recipe.p = 12;
  recipe.prior = NormalPrior{0.2};
  recipe.sigma_e2 = 1.5;
  recipe.fixed_effects = Vector::Ones(2);
  recipe.seed = 8;
  const SimulatedDataset a = simulate_dataset(recipe);
  const SimulatedDataset b = simulate_dataset(recipe);
  CHECK(a.W.codes == b.W.codes);
  CHECK(a.b_true == b.b_true);
  CHECK(a.X == b.X);
  CHECK(a.c_true == b.c_true);
  CHECK(a.y.y == b.y.y);

  recipe.seed = 9;
  const SimulatedDataset c = simulate_dataset(recipe);
  CHECK(a.y.y != c.y.y);
}

TEST_CASE("genotype columns are keyed by index, not by panel width") {
  // Column j is a fixed function of (seed, j): growing the panel must not
  // change earlier columns.
  const GenotypeMatrix small = simulate_genotypes(50, 10, 0.05, 0.5, 4);
  const GenotypeMatrix big = simulate_genotypes(50, 20, 0.05, 0.5, 4);
  CHECK(small.codes == big.codes.leftCols(10));
}

TEST_CASE("genotype frequencies respect the maf window and Hardy-Weinberg variance") {
  const double lo = 0.2, hi = 0.4;
  const GenotypeMatrix W = simulate_genotypes(4000, 60, lo, hi, 12);
  const Vector freqs = allele_frequencies(W);
  double pooled_var_ratio = 0.0;
  for (Eigen::Index j = 0; j < W.p(); ++j) {
    // Realized frequency: binomial se around a p in [lo, hi].
    const double se = std::sqrt(0.5 * 0.5 / (2.0 * 4000));
    CHECK(freqs[j] > lo - 4 * se);
    CHECK(freqs[j] < hi + 4 * se);
    const double mean = W.codes.col(j).mean();
    const double var = (W.codes.col(j).array() - mean).square().sum() / (4000 - 1);
    pooled_var_ratio += var / (2.0 * freqs[j] * (1.0 - freqs[j]));
  }
  // Column variance should match 2p(1-p) on average.
  CHECK(pooled_var_ratio / 60.0 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal effects match their variance") {
  const Vector b = simulate_effects(200000, NormalPrior{0.25}, 5);
  const double mean = b.mean();
  const double var = (b.array() - mean).square().sum() / (b.size() - 1);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(0.25 / 200000));
  CHECK(var == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("scaled inverse chi-square effects are heavy tailed with the right scale") {
  // Marginal variance of b is E[sigma_j2] = df*scale/(df-2); marginally
  // Student-t so kurtosis exceeds the normal value 3.
  const double df = 6.0, scale = 0.5;
  const Vector b = simulate_effects(200000, ScaledInvChiSqPrior{df, scale}, 6);
  const double var = (b.array() - b.mean()).square().sum() / (b.size() - 1);
  CHECK(var == doctest::Approx(df * scale / (df - 2.0)).epsilon(0.05));
  const double kurt = (b.array() / std::sqrt(var)).pow(4).mean();
  CHECK(kurt > 3.3);
}

TEST_CASE("spike and slab effects have the right zero fraction") {
  const double q = 0.07;
  const Vector b = simulate_effects(100000, SpikeSlabPrior{q, 4.012, 1.0}, 7);
  Eigen::Index zeros = 0;
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b[j] == 0.0) ++zeros;
  const double zero_frac = static_cast<double>(zeros) / static_cast<double>(b.size());
  CHECK(std::abs(zero_frac - (1.0 - q)) < 4.0 * std::sqrt(q * (1 - q) / 100000.0));
}

TEST_CASE("phenotype decomposition holds exactly") {
  SimulationRecipe recipe;
  recipe.n = 25;
  recipe.p = 8;
  recipe.prior = NormalPrior{0.5};
  recipe.sigma_e2 = 2.0;
  recipe.fixed_effects = Vector::LinSpaced(3, -1.0, 1.0);
  recipe.seed = 21;
  const SimulatedDataset d = simulate_dataset(recipe);
  CHECK(d.g_true == d.W.codes * d.b_true);  // no missing entries here
  const Vector rebuilt = d.X * d.c_true + d.g_true + d.e;
  CHECK((d.y.y - rebuilt).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.y.ids == d.W.individual_ids);
}

TEST_CASE("residual variance is calibrated") {
  SimulationRecipe recipe;
  recipe.n = 100000;
  recipe.p = 1;
  recipe.prior = NormalPrior{0.0};
  recipe.sigma_e2 = 3.0;
  recipe.seed = 14;
  const SimulatedDataset d = simulate_dataset(recipe);
  const double var = (d.e.array() - d.e.mean()).square().sum() / (d.e.size() - 1);
  CHECK(var == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("sire family records recover both variance components") {
  // One-way ANOVA method of moments on balanced families:
  // sigma_s2_hat = (MSB - MSW) / m.
  const int f = 2000, m = 10;
  const double sigma_s2 = 0.5, sigma_e2 = 2.0;
  const SireFamilyData fam =
      simulate_sire_families(f, std::vector<int>(f, m), sigma_s2, sigma_e2, 17);
  CHECK(fam.y.size() == f * m);
  CHECK(fam.families.levels == f);
  CHECK(fam.s_true.size() == f);

  const double grand = fam.y.mean();
  Vector means = Vector::Zero(f);
  for (int i = 0; i < f * m; ++i) means[fam.families.level[i]] += fam.y[i];
  means /= m;
  double ssb = 0.0, ssw = 0.0;
  for (int i = 0; i < f * m; ++i) {
    const double dev = fam.y[i] - means[fam.families.level[i]];
    ssw += dev * dev;
  }
  for (int s = 0; s < f; ++s) ssb += m * (means[s] - grand) * (means[s] - grand);
  const double msw = ssw / (f * (m - 1));
  const double msb = ssb / (f - 1);
  CHECK(msw == doctest::Approx(sigma_e2).epsilon(0.03));
  CHECK((msb - msw) / m == doctest::Approx(sigma_s2).epsilon(0.1));

  // True sire effects drive the family means.
  Vector mvec(f), svec(f);
  for (int s = 0; s < f; ++s) {
    mvec[s] = means[s];
    svec[s] = fam.s_true[s];
  }
  CHECK(oracle::pearson(mvec, svec) > 0.75);
}

TEST_CASE("unbalanced family sizes are honored") {
  const std::vector<int> sizes = {1, 4, 0, 7};
  const SireFamilyData fam = simulate_sire_families(4, sizes, 1.0, 1.0, 2);
  CHECK(fam.y.size() == 12);
  Vector counts = fam.families.counts();
  CHECK(counts[0] == 1.0);
  CHECK(counts[1] == 4.0);
  CHECK(counts[2] == 0.0);
  CHECK(counts[3] == 7.0);
}

TEST_CASE("marker scan model has independent truth and error of the stated sizes") {
  const double sigma_b2 = 0.5, sigma_err2 = 0.25;
  const MarkerScanData scan = simulate_marker_scan(200000, sigma_b2, sigma_err2, 23);
  const Vector err = scan.b_tilde - scan.b_true;
  const double vb = (scan.b_true.array() - scan.b_true.mean()).square().sum() / (200000 - 1);
  const double ve = (err.array() - err.mean()).square().sum() / (200000 - 1);
  CHECK(vb == doctest::Approx(sigma_b2).epsilon(0.02));
  CHECK(ve == doctest::Approx(sigma_err2).epsilon(0.02));
  CHECK(std::abs(oracle::pearson(scan.b_true, err)) < 0.01);
}

TEST_CASE("recipe validation rejects nonsense") {
  SimulationRecipe recipe;
  recipe.n = 0;
  recipe.p = 5;
  CHECK_THROWS_AS(recipe.validate(), std::invalid_argument);
  recipe.n = 5;
  recipe.maf_low = 0.6;
  recipe.maf_high = 0.4;
  CHECK_THROWS_AS(recipe.validate(), std::invalid_argument);
  recipe.maf_low = 0.05;
  recipe.maf_high = 0.5;
  recipe.sigma_e2 = -1.0;
  CHECK_THROWS_AS(recipe.validate(), std::invalid_argument);
}
