#pragma once

// Seeded generators for marker data, effect vectors under each prior,
// phenotypes, sire-family records, and the direct marker-scan model.
//
// Stream derivation (see rng.hpp): genotype column j draws from
// substream(seed, kGenotypeColumn, j); effect vectors from
// substream(seed, kEffects, 0); residuals from substream(seed, kResidual, 0);
// a generated fixed design from substream(seed, kFixedDesign, 0); sire
// effects and records from kSireEffects/kResidual; the marker scan from
// kMarkerScan. Output is therefore a pure function of the recipe.

#include "gpred/rng.hpp"
#include "gpred/types.hpp"

namespace gpred {

struct SimulationRecipe {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double maf_low = 0.05;
  double maf_high = 0.5;
  EffectPrior prior = NormalPrior{1.0};
  double sigma_e2 = 1.0;
  Vector fixed_effects;  // true c; empty = no fixed part
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedDataset {
  GenotypeMatrix W;
  Vector b_true;
  Matrix X;        // n x c, empty when there is no fixed part
  Vector c_true;   // length c
  Vector g_true;   // W * b_true
  Vector e;
  PhenotypeVector y;  // y = X c + g + e exactly
};

// Loci in linkage equilibrium: column i is Binomial(2, p_i) per individual
// with p_i uniform on [maf_low, maf_high].
GenotypeMatrix simulate_genotypes(Eigen::Index n, Eigen::Index p, double maf_low,
                                  double maf_high, std::uint64_t seed);

// Normal: iid N(0, sigma_b2). ScaledInvChiSq: per-locus variance from the
// scaled inverse-chi-square, then a normal draw (marginally Student-t).
// SpikeSlab: exactly zero with probability 1-q, otherwise as ScaledInvChiSq.
Vector simulate_effects(Eigen::Index p, const EffectPrior& prior, std::uint64_t seed);

SimulatedDataset simulate_phenotypes(const GenotypeMatrix& W, const Vector& b_true,
                                     const Matrix& X, const Vector& c_true,
                                     double sigma_e2, std::uint64_t seed);

// One-stop composition of the three generators above; a fixed design of iid
// N(0,1) covariates is generated when the recipe carries true fixed effects.
SimulatedDataset simulate_dataset(const SimulationRecipe& recipe);

struct SireFamilyData {
  Vector y;                  // all records, family-major order
  IncidenceMatrix families;  // record -> family
  Vector s_true;             // f true sire effects
};

// Records y = s_i + e with s ~ N(0, sigma_s2), e ~ N(0, sigma_e2).
SireFamilyData simulate_sire_families(int f, const std::vector<int>& family_sizes,
                                      double sigma_s2, double sigma_e2, std::uint64_t seed);

struct MarkerScanData {
  Vector b_true;
  Vector b_tilde;  // b_true + independent N(0, sigma_err2) noise
};

// The direct scan model: least-squares estimates as truth plus homoscedastic
// sampling error.
MarkerScanData simulate_marker_scan(Eigen::Index n_markers, double sigma_b2,
                                    double sigma_err2, std::uint64_t seed);

}  // namespace gpred
