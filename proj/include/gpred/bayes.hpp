#pragma once

// Gibbs samplers for SNP effects under heavy-tailed (Bayes A) and
// spike-and-slab (Bayes B) priors. Estimates are posterior means, i.e. the
// conditional-expectation estimator that stays calibrated under selection.
//
// Reproducibility contract: every locus draws from its own RNG stream,
// substream(chain_seed, stream::kLocus, key). Keys default to the column
// index; the Gibbs sweep visits loci in increasing key order. Permuting the
// columns of W together with their keys therefore permutes every posterior
// summary exactly, and a locus's stream never shifts when other loci are
// added or removed.

#include "gpred/types.hpp"

#include <cstdint>
#include <vector>

namespace gpred {

struct ChainConfig {
  long iterations = 10000;
  long burn_in = 1000;
  long thinning = 10;
  std::uint64_t seed = 1;
  int chain_count = 1;
  std::vector<std::uint64_t> locus_keys;  // empty = 0..p-1

  long kept_per_chain() const { return (iterations - burn_in) / thinning; }

  void validate() const {
    if (burn_in < 0 || iterations <= burn_in)
      throw std::invalid_argument("ChainConfig: need iterations > burn_in >= 0");
    if (thinning < 1) throw std::invalid_argument("ChainConfig: thinning must be >= 1");
    if (chain_count < 1) throw std::invalid_argument("ChainConfig: chain_count must be >= 1");
  }
};

// Residual-variance treatment plus degenerate-prior switches used by the
// reduction-chain oracles.
struct BayesOptions {
  double sigma_e2 = 1.0;        // fixed value, or sampling start + prior mean
  bool sample_sigma_e = true;   // false: hold sigma_e2 fixed
  double sigma_e_prior_df = 4.0;
  bool pin_marker_variance = false;  // hold every sigma2_bj at the prior scale
                                     // (the df -> inf limit; BLUP oracle mode)
};

struct PosteriorSummary {
  Vector mean;             // per effect: Monte-Carlo estimate of E(b|data)
  Vector sd;               // posterior sd
  Vector mcse;             // batch-means MC standard error of each mean
  Vector rhat;             // split-chain potential scale reduction
  Vector inclusion_prob;   // Bayes B: posterior P(b_j != 0); empty otherwise
  Vector fixed_mean;       // posterior mean of fixed effects
  double sigma_e2_mean = 0.0;

  std::vector<Matrix> effect_traces;    // per chain: kept x p (thinned)
  std::vector<Vector> sigma_e2_traces;  // per chain: kept

  std::uint64_t seed = 0;
  long iterations = 0;
  int chains = 0;

  ModelFit to_fit(const std::string& method, const Matrix& W) const;
};

PosteriorSummary bayes_a(const Matrix& W, const FixedDesign& X, const Vector& y,
                         const ScaledInvChiSqPrior& prior, const BayesOptions& opts,
                         const ChainConfig& cfg);

PosteriorSummary bayes_b(const Matrix& W, const FixedDesign& X, const Vector& y,
                         const SpikeSlabPrior& prior, const BayesOptions& opts,
                         const ChainConfig& cfg);

// Diagnostics over retained draws; one column per monitored scalar, one
// matrix per chain (equal shapes). Requires >= 10 retained samples per chain.
struct ChainDiagnostics {
  Vector mean;
  Vector sd;
  Vector mcse;
  Vector rhat;
};

ChainDiagnostics chain_summary(const std::vector<Matrix>& chain_traces);

}  // namespace gpred
