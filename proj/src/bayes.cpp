#include "gpred/bayes.hpp"

#include "gpred/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gpred {

namespace {

struct LocusPrior {
  bool spike = false;  // Bayes B: point mass at 0 with probability 1-q
  double q = 1.0;
  double df = 4.012;
  double scale = 1.0;
};

struct ChainDraws {
  Matrix effects;  // kept x p
  Matrix deltas;   // kept x p, spike mode only
  Matrix fixed;    // kept x c
  Vector sigma_e2; // kept
};

// Marginal log-likelihood of one locus with its effect integrated out,
// up to a constant shared by all variance states; s2 = 0 gives 0.
double integrated_loglik(double s2, double xx, double rhs, double se2) {
  if (s2 <= 0.0) return 0.0;
  return -0.5 * std::log1p(xx * s2 / se2) + 0.5 * rhs * rhs / (se2 * (xx + se2 / s2));
}

ChainDraws run_chain(const Matrix& W, const Matrix& X, const Vector& y, const LocusPrior& prior,
                     const BayesOptions& opts, const ChainConfig& cfg, int chain_index,
                     const std::vector<std::uint64_t>& keys,
                     const std::vector<Eigen::Index>& order) {
  const Eigen::Index n = W.rows();
  const Eigen::Index p = W.cols();
  const Eigen::Index c = X.cols();
  const std::uint64_t cseed = chain_seed(cfg.seed, static_cast<std::uint64_t>(chain_index));

  // One stream per locus, keyed by the caller-visible locus key; global
  // updates get their own streams. See the header's reproducibility note.
  std::vector<Rng> locus_rng;
  locus_rng.reserve(static_cast<size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    locus_rng.push_back(substream(cseed, stream::kLocus, keys[static_cast<size_t>(j)]));
  Rng fixed_rng = substream(cseed, stream::kFixedEffects, 0);
  Rng var_rng = substream(cseed, stream::kVariance, 0);

  const Vector xx = W.colwise().squaredNorm();
  const Vector xtx = X.colwise().squaredNorm();

  Vector b = Vector::Zero(p);
  Vector s2b = Vector::Constant(p, prior.scale);
  std::vector<char> delta(static_cast<size_t>(p), 1);
  if (prior.spike)
    for (Eigen::Index j = 0; j < p; ++j)
      delta[static_cast<size_t>(j)] = locus_rng[static_cast<size_t>(j)].bernoulli(prior.q) ? 1 : 0;
  Vector cvec = Vector::Zero(c);
  double se2 = opts.sigma_e2;
  Vector yadj = y;  // y - Xc - Wb, maintained incrementally

  // Residual prior scale chosen so the prior mean equals the start value.
  const double nu0 = opts.sigma_e_prior_df;
  const double s0 = nu0 > 2.0 ? opts.sigma_e2 * (nu0 - 2.0) / nu0 : opts.sigma_e2;

  const long kept = cfg.kept_per_chain();
  ChainDraws out;
  out.effects.resize(kept, p);
  if (prior.spike) out.deltas.resize(kept, p);
  out.fixed.resize(kept, c);
  out.sigma_e2.resize(kept);
  long row = 0;

  for (long it = 1; it <= cfg.iterations; ++it) {
    for (Eigen::Index k = 0; k < c; ++k) {
      const double rhs = X.col(k).dot(yadj) + xtx[k] * cvec[k];
      const double mean = rhs / xtx[k];
      const double cnew = fixed_rng.normal(mean, std::sqrt(se2 / xtx[k]));
      yadj += X.col(k) * (cvec[k] - cnew);
      cvec[k] = cnew;
    }

    for (Eigen::Index idx = 0; idx < p; ++idx) {
      const Eigen::Index j = order[static_cast<size_t>(idx)];
      Rng& rng = locus_rng[static_cast<size_t>(j)];
      const double bj = b[j];
      const double rhs = W.col(j).dot(yadj) + xx[j] * bj;

      if (prior.spike) {
        // Metropolis step on (inclusion, variance) with the effect
        // integrated out; the proposal is the prior, so the acceptance
        // ratio is just the marginal likelihood ratio.
        const bool dstar = rng.bernoulli(prior.q);
        const double s2star = dstar ? rng.scaled_inv_chi2(prior.df, prior.scale) : 0.0;
        const double cur = integrated_loglik(delta[static_cast<size_t>(j)] ? s2b[j] : 0.0,
                                             xx[j], rhs, se2);
        const double star = integrated_loglik(s2star, xx[j], rhs, se2);
        if (std::log(rng.uniform01()) < star - cur) {
          delta[static_cast<size_t>(j)] = dstar ? 1 : 0;
          if (dstar) s2b[j] = s2star;
        }
      }

      double bnew = 0.0;
      if (!prior.spike || delta[static_cast<size_t>(j)]) {
        const double v = xx[j] + se2 / s2b[j];
        bnew = rng.normal(rhs / v, std::sqrt(se2 / v));
      }
      if (bnew != bj) yadj += W.col(j) * (bj - bnew);
      b[j] = bnew;

      if (!opts.pin_marker_variance && (!prior.spike || delta[static_cast<size_t>(j)]))
        s2b[j] = (prior.df * prior.scale + bnew * bnew) / rng.chi2(prior.df + 1.0);
    }

    if (opts.sample_sigma_e) {
      const double ssr = yadj.squaredNorm();
      se2 = (nu0 * s0 + ssr) / var_rng.chi2(nu0 + static_cast<double>(n));
    }

    if (!std::isfinite(se2) || !yadj.allFinite())
      throw std::runtime_error("chain " + std::to_string(chain_index) +
                               " diverged at iteration " + std::to_string(it));

    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) {
      out.effects.row(row) = b.transpose();
      if (prior.spike)
        for (Eigen::Index j = 0; j < p; ++j)
          out.deltas(row, j) = static_cast<double>(delta[static_cast<size_t>(j)]);
      out.fixed.row(row) = cvec.transpose();
      out.sigma_e2[row] = se2;
      ++row;
    }
  }
  return out;
}

PosteriorSummary run_sampler(const Matrix& W, const FixedDesign& X, const Vector& y,
                             const LocusPrior& prior, const BayesOptions& opts,
                             const ChainConfig& cfg) {
  const Eigen::Index n = W.rows();
  const Eigen::Index p = W.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("bayes: empty design");
  if (y.size() != n) throw std::invalid_argument("bayes: y length mismatch");
  if (X.X.cols() > 0 && X.X.rows() != n)
    throw std::invalid_argument("bayes: fixed design row count mismatch");
  if (!(prior.df > 0.0) || !(prior.scale > 0.0))
    throw std::invalid_argument("bayes: prior df and scale must be > 0");
  if (!(opts.sigma_e2 > 0.0)) throw std::invalid_argument("bayes: sigma_e2 must be > 0");
  cfg.validate();
  if (X.X.cols() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(X.X);
    if (qr.rank() < X.X.cols())
      throw std::invalid_argument("bayes: fixed-effect design is rank deficient");
  }
  if (cfg.kept_per_chain() < 1)
    throw std::invalid_argument("bayes: no retained samples (check burn_in/thinning)");

  std::vector<std::uint64_t> keys = cfg.locus_keys;
  if (keys.empty()) {
    keys.resize(static_cast<size_t>(p));
    std::iota(keys.begin(), keys.end(), std::uint64_t{0});
  }
  if (static_cast<Eigen::Index>(keys.size()) != p)
    throw std::invalid_argument("bayes: locus key count mismatch");
  std::vector<Eigen::Index> order(static_cast<size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b2) {
    return keys[static_cast<size_t>(a)] < keys[static_cast<size_t>(b2)];
  });

  std::vector<ChainDraws> draws(static_cast<size_t>(cfg.chain_count));
  for (int ch = 0; ch < cfg.chain_count; ++ch)
    draws[static_cast<size_t>(ch)] = run_chain(W, X.X, y, prior, opts, cfg, ch, keys, order);

  PosteriorSummary out;
  out.seed = cfg.seed;
  out.iterations = cfg.iterations;
  out.chains = cfg.chain_count;
  for (auto& d : draws) {
    out.effect_traces.push_back(d.effects);
    out.sigma_e2_traces.push_back(d.sigma_e2);
  }

  ChainDiagnostics diag = chain_summary(out.effect_traces);
  out.mean = diag.mean;
  out.sd = diag.sd;
  out.mcse = diag.mcse;
  out.rhat = diag.rhat;

  const long kept = cfg.kept_per_chain();
  const double total = static_cast<double>(kept) * cfg.chain_count;
  if (prior.spike) {
    out.inclusion_prob = Vector::Zero(p);
    for (auto& d : draws) out.inclusion_prob += d.deltas.colwise().sum().transpose();
    out.inclusion_prob /= total;
  }
  out.fixed_mean = Vector::Zero(X.X.cols());
  double se2_sum = 0.0;
  for (auto& d : draws) {
    if (d.fixed.cols() > 0) out.fixed_mean += d.fixed.colwise().mean().transpose();
    se2_sum += d.sigma_e2.mean();
  }
  if (cfg.chain_count > 0) {
    out.fixed_mean /= static_cast<double>(cfg.chain_count);
    out.sigma_e2_mean = se2_sum / static_cast<double>(cfg.chain_count);
  }
  return out;
}

}  // namespace

PosteriorSummary bayes_a(const Matrix& W, const FixedDesign& X, const Vector& y,
                         const ScaledInvChiSqPrior& prior, const BayesOptions& opts,
                         const ChainConfig& cfg) {
  validate(EffectPrior{prior});
  LocusPrior lp;
  lp.spike = false;
  lp.df = prior.df;
  lp.scale = prior.scale;
  return run_sampler(W, X, y, lp, opts, cfg);
}

PosteriorSummary bayes_b(const Matrix& W, const FixedDesign& X, const Vector& y,
                         const SpikeSlabPrior& prior, const BayesOptions& opts,
                         const ChainConfig& cfg) {
  validate(EffectPrior{prior});
  LocusPrior lp;
  lp.spike = true;
  lp.q = prior.q;
  lp.df = prior.df;
  lp.scale = prior.scale;
  return run_sampler(W, X, y, lp, opts, cfg);
}

ChainDiagnostics chain_summary(const std::vector<Matrix>& chain_traces) {
  if (chain_traces.empty()) throw std::invalid_argument("chain_summary: no chains");
  const Eigen::Index kept = chain_traces.front().rows();
  const Eigen::Index m = chain_traces.front().cols();
  for (const auto& t : chain_traces)
    if (t.rows() != kept || t.cols() != m)
      throw std::invalid_argument("chain_summary: chains have unequal shapes");
  if (kept < 10) throw std::invalid_argument("chain_summary: need >= 10 retained samples");
  const double C = static_cast<double>(chain_traces.size());
  const double N = C * static_cast<double>(kept);

  ChainDiagnostics d;
  d.mean = Vector::Zero(m);
  d.sd = Vector::Zero(m);
  d.mcse = Vector::Zero(m);
  d.rhat = Vector::Zero(m);

  for (const auto& t : chain_traces) d.mean += t.colwise().sum().transpose();
  d.mean /= N;

  for (const auto& t : chain_traces)
    d.sd += (t.rowwise() - d.mean.transpose()).colwise().squaredNorm().transpose();
  d.sd = (d.sd / (N - 1.0)).cwiseSqrt();

  // Batch-means MC standard error, combined across independent chains.
  const Eigen::Index bs = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(kept)))));
  const Eigen::Index nb = kept / bs;
  for (Eigen::Index col = 0; col < m; ++col) {
    double mcse2 = 0.0;
    for (const auto& t : chain_traces) {
      const double cmean = t.col(col).head(nb * bs).mean();
      double ss = 0.0;
      for (Eigen::Index bidx = 0; bidx < nb; ++bidx) {
        const double bmean = t.col(col).segment(bidx * bs, bs).mean();
        ss += (bmean - cmean) * (bmean - cmean);
      }
      const double var_bm = nb > 1 ? ss / static_cast<double>(nb - 1) : 0.0;
      mcse2 += var_bm / static_cast<double>(nb);
    }
    d.mcse[col] = std::sqrt(mcse2) / C;
  }

  // Split-chain potential scale reduction: each chain contributes two halves.
  const Eigen::Index L = kept / 2;
  for (Eigen::Index col = 0; col < m; ++col) {
    std::vector<double> means, vars;
    for (const auto& t : chain_traces) {
      for (int half = 0; half < 2; ++half) {
        const auto seg = t.col(col).segment(half == 0 ? 0 : kept - L, L);
        const double mu = seg.mean();
        means.push_back(mu);
        vars.push_back((seg.array() - mu).square().sum() / static_cast<double>(L - 1));
      }
    }
    const double nseq = static_cast<double>(means.size());
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / nseq;
    double B = 0.0;
    for (double mu : means) B += (mu - grand) * (mu - grand);
    B *= static_cast<double>(L) / (nseq - 1.0);
    const double Wv = std::accumulate(vars.begin(), vars.end(), 0.0) / nseq;
    if (Wv <= 0.0) {
      d.rhat[col] = 1.0;  // constant sequences
    } else {
      const double var_plus =
          (static_cast<double>(L - 1) / static_cast<double>(L)) * Wv + B / static_cast<double>(L);
      d.rhat[col] = std::sqrt(var_plus / Wv);
    }
  }
  return d;
}

ModelFit PosteriorSummary::to_fit(const std::string& method, const Matrix& W) const {
  ModelFit fit;
  fit.method = method;
  fit.fixed_estimates = fixed_mean;
  fit.random_estimates = mean;
  fit.random_sd = sd;
  fit.inclusion_prob = inclusion_prob;
  if (W.rows() > 0 && W.cols() == mean.size()) fit.fitted_genetic_values = W * mean;
  fit.variance_components = VarianceComponents{sigma_e2_mean, 0.0};
  fit.seed = seed;
  fit.chains = chains;
  fit.iterations = iterations;
  return fit;
}

}  // namespace gpred
