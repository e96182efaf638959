#include "gpred/cli.hpp"

#include "gpred/bayes.hpp"
#include "gpred/blup.hpp"
#include "gpred/core.hpp"
#include "gpred/evaluate.hpp"
#include "gpred/io.hpp"
#include "gpred/rng.hpp"
#include "gpred/simulate.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <unordered_map>

namespace gpred::cli {

namespace {

// Every command echoes its fully resolved configuration so a run can be
// reproduced from its meta file alone.
void write_meta(const std::string& path, const std::string& config_echo,
                const std::vector<std::pair<std::string, std::string>>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "# resolved configuration\n" << config_echo;
  out << "# results\n";
  for (const auto& [k, v] : results) out << k << '=' << v << '\n';
}

struct AlignedData {
  Vector y;
  Matrix covariates;
};

// Reorder phenotype rows to genotype order; every genotyped id must appear.
AlignedData align_phenotypes(const std::vector<std::string>& ids, const PhenotypeTable& ph) {
  std::unordered_map<std::string, size_t> row_of;
  for (size_t r = 0; r < ph.phenotypes.ids.size(); ++r) row_of.emplace(ph.phenotypes.ids[r], r);
  AlignedData out;
  out.y.resize(static_cast<Eigen::Index>(ids.size()));
  out.covariates.resize(static_cast<Eigen::Index>(ids.size()), ph.covariates.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = row_of.find(ids[i]);
    if (it == row_of.end())
      throw std::runtime_error("phenotype file is missing id '" + ids[i] + "'");
    out.y[static_cast<Eigen::Index>(i)] = ph.phenotypes.y[static_cast<Eigen::Index>(it->second)];
    if (ph.covariates.cols() > 0)
      out.covariates.row(static_cast<Eigen::Index>(i)) =
          ph.covariates.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

FixedDesign build_fixed(const std::string& kind, const Matrix& covariates, Eigen::Index n) {
  Matrix X(n, 0);
  if (kind == "intercept")
    X = Matrix::Ones(n, 1);
  else if (kind != "none")
    throw std::runtime_error("unknown --fixed value '" + kind + "' (use none or intercept)");
  if (covariates.cols() > 0) {
    Matrix Xc(n, X.cols() + covariates.cols());
    Xc << X, covariates;
    X = Xc;
  }
  return FixedDesign{X};
}

// id -> group label file (two text columns); values are strings, so this
// does not go through the numeric Table reader.
IncidenceMatrix read_groups(const std::string& path, const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string line;
  std::unordered_map<std::string, std::string> group_of;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;  // header
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ":1: expected two tab-separated fields");
    group_of.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  IncidenceMatrix Z;
  Z.level.reserve(ids.size());
  std::unordered_map<std::string, int> level_of;
  for (const auto& id : ids) {
    auto it = group_of.find(id);
    if (it == group_of.end())
      throw std::runtime_error(path + ": missing group for id '" + id + "'");
    auto [lit, inserted] = level_of.emplace(it->second, Z.levels);
    if (inserted) {
      Z.level_ids.push_back(it->second);
      ++Z.levels;
    }
    Z.level.push_back(lit->second);
  }
  return Z;
}

Table effects_table(const std::vector<std::string>& ids,
                    const std::vector<std::pair<std::string, Vector>>& cols) {
  Table t("id", {}, static_cast<Eigen::Index>(ids.size()));
  t.ids = ids;
  t.column_names = {"id"};
  t.values.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (const auto& [name, v] : cols) {
    t.column_names.push_back(name);
    t.values.col(c++) = v;
  }
  return t;
}

std::vector<std::string> default_ids(const char* stem, Eigen::Index k) {
  std::vector<std::string> ids(static_cast<size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) ids[static_cast<size_t>(i)] = stem + std::to_string(i + 1);
  return ids;
}

Eigen::Index find_column(const Table& t, const std::string& name, const std::string& path) {
  for (size_t c = 1; c < t.column_names.size(); ++c)
    if (t.column_names[c] == name) return static_cast<Eigen::Index>(c - 1);
  throw std::runtime_error(path + ": no column named '" + name + "'");
}

// Inner join of two (id, value) tables in the order of the first.
void join_by_id(const Table& a, Eigen::Index col_a, const Table& b, Eigen::Index col_b,
                Vector& va, Vector& vb) {
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (size_t r = 0; r < b.ids.size(); ++r)
    row_of.emplace(b.ids[r], static_cast<Eigen::Index>(r));
  std::vector<double> xs, ys;
  for (size_t r = 0; r < a.ids.size(); ++r) {
    auto it = row_of.find(a.ids[r]);
    if (it == row_of.end()) continue;
    xs.push_back(a.values(static_cast<Eigen::Index>(r), col_a));
    ys.push_back(b.values(it->second, col_b));
  }
  if (xs.empty()) throw std::runtime_error("the two files share no ids");
  va = Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  vb = Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
}

struct MetricRows {
  std::vector<std::string> names;
  std::vector<double> values;
  void add(const std::string& n, double v) {
    names.push_back(n);
    values.push_back(v);
  }
  Table table() const {
    Table t("metric", {"value"}, static_cast<Eigen::Index>(names.size()));
    t.ids = names;
    for (size_t i = 0; i < values.size(); ++i)
      t.values(static_cast<Eigen::Index>(i), 0) = values[i];
    return t;
  }
};

// ---- simulate ----

struct SimulateArgs {
  long n = 0, p = 0;
  double maf_low = 0.05, maf_high = 0.5;
  std::string prior = "normal";
  double sigma_b2 = 1.0, df = 4.012, scale = 1.0, q = 0.05;
  double sigma_e2 = 1.0;
  long covariates = 0;
  std::string out_prefix;
};

int run_simulate(const SimulateArgs& a, std::uint64_t seed, const std::string& echo) {
  SimulationRecipe recipe;
  recipe.n = a.n;
  recipe.p = a.p;
  recipe.maf_low = a.maf_low;
  recipe.maf_high = a.maf_high;
  recipe.sigma_e2 = a.sigma_e2;
  recipe.seed = seed;
  if (a.prior == "normal")
    recipe.prior = NormalPrior{a.sigma_b2};
  else if (a.prior == "scaled-inv-chi2")
    recipe.prior = ScaledInvChiSqPrior{a.df, a.scale};
  else if (a.prior == "spike-slab")
    recipe.prior = SpikeSlabPrior{a.q, a.df, a.scale};
  else
    throw std::runtime_error("unknown --prior '" + a.prior + "'");
  if (a.covariates > 0) {
    Rng rng = substream(seed, stream::kFixedEffects, 0);
    recipe.fixed_effects.resize(a.covariates);
    for (long k = 0; k < a.covariates; ++k) recipe.fixed_effects[k] = rng.normal();
  }
  const SimulatedDataset data = simulate_dataset(recipe);

  write_genotypes(a.out_prefix + ".genotypes.tsv", data.W);
  PhenotypeTable ph;
  ph.phenotypes = data.y;
  if (data.X.cols() > 0) {
    ph.covariates = data.X;
    ph.covariate_names = default_ids("x", data.X.cols());
  }
  if (ph.phenotypes.ids.empty()) ph.phenotypes.ids = data.W.individual_ids;
  write_phenotypes(a.out_prefix + ".phenotypes.tsv", ph);
  write_table(a.out_prefix + ".effects.tsv",
              effects_table(data.W.marker_ids, {{"effect", data.b_true}}));

  std::vector<std::pair<std::string, std::string>> results = {
      {"genetic_variance_expected",
       format_real(expected_genetic_variance(allele_frequencies(data.W),
                                             a.prior == "normal" ? a.sigma_b2 : a.scale))},
      {"genetic_variance_realized",
       format_real((data.g_true.array() - data.g_true.mean()).square().sum() /
                   static_cast<double>(data.g_true.size() - 1))},
  };
  write_meta(a.out_prefix + ".meta", echo, results);
  std::cout << "simulate: wrote " << a.out_prefix << ".{genotypes,phenotypes,effects}.tsv\n";
  return 0;
}

// ---- fit ----

struct FitArgs {
  std::string method;
  std::string genotypes, phenotypes, groups, effects_in;
  std::string fixed = "intercept";
  std::string grm = "centered";
  double sigma_e2 = 1.0, sigma_u2 = 1.0;
  double lambda = -1.0;  // shrink only; <0 = derive from variances
  double q = 0.05, df = 4.012, scale = 1.0;
  double genetic_variance = -1.0;  // <0 = use --scale directly
  long iterations = 10000, burn_in = 1000, thinning = 10;
  int chains = 1;
  bool pin_variance = false, fix_sigma_e = false;
  std::string out_effects, out_meta, out_trace;
};

void write_bayes_outputs(const FitArgs& a, const PosteriorSummary& summary,
                         const std::vector<std::string>& marker_ids, const std::string& echo) {
  std::vector<std::pair<std::string, Vector>> cols = {{"estimate", summary.mean},
                                                      {"sd", summary.sd},
                                                      {"mcse", summary.mcse},
                                                      {"rhat", summary.rhat}};
  if (summary.inclusion_prob.size() > 0) cols.emplace_back("inclusion", summary.inclusion_prob);
  write_table(a.out_effects, effects_table(marker_ids, cols));
  std::vector<std::pair<std::string, std::string>> results;
  results.emplace_back("sigma_e2_posterior_mean", format_real(summary.sigma_e2_mean));
  for (Eigen::Index k = 0; k < summary.fixed_mean.size(); ++k)
    results.emplace_back("fixed." + std::to_string(k), format_real(summary.fixed_mean[k]));
  if (summary.fixed_mean.size() == 1)
    results.emplace_back("intercept", format_real(summary.fixed_mean[0]));
  write_meta(a.out_meta, echo, results);
  if (!a.out_trace.empty()) {
    const Eigen::Index kept = summary.effect_traces.front().rows();
    const auto chains = static_cast<Eigen::Index>(summary.effect_traces.size());
    Table t("draw", {}, chains * kept);
    t.column_names = {"draw"};
    for (const auto& id : marker_ids) t.column_names.push_back(id);
    t.values.resize(chains * kept, static_cast<Eigen::Index>(marker_ids.size()));
    for (Eigen::Index ch = 0; ch < chains; ++ch)
      for (Eigen::Index s = 0; s < kept; ++s) {
        t.ids[static_cast<size_t>(ch * kept + s)] =
            std::to_string(ch) + ":" + std::to_string(s);
        t.values.row(ch * kept + s) = summary.effect_traces[static_cast<size_t>(ch)].row(s);
      }
    write_table(a.out_trace, t);
  }
}

int run_fit(const FitArgs& a, std::uint64_t seed, int threads, const std::string& echo) {
  std::vector<std::pair<std::string, std::string>> results;

  if (a.method == "shrink") {
    const Table t = read_table(a.effects_in);
    const Eigen::Index col = find_column(t, "estimate", a.effects_in);
    const double lam = a.lambda >= 0.0 ? a.lambda : VarianceComponents{a.sigma_e2, a.sigma_u2}.lambda();
    const Vector shrunk = shrink_ls(t.values.col(col), lam);
    write_table(a.out_effects, effects_table(t.ids, {{"estimate", shrunk}}));
    results.emplace_back("lambda", format_real(lam));
    write_meta(a.out_meta, echo, results);
    std::cout << "fit: wrote " << a.out_effects << "\n";
    return 0;
  }

  const GenotypeMatrix W = read_genotypes(a.genotypes);
  const PhenotypeTable ph = read_phenotypes(a.phenotypes);
  const AlignedData data = align_phenotypes(W.individual_ids, ph);
  const FixedDesign X = build_fixed(a.fixed, data.covariates, W.n());
  const VarianceComponents vc{a.sigma_e2, a.sigma_u2};

  auto record_fixed = [&](const ModelFit& fit) {
    for (Eigen::Index k = 0; k < fit.fixed_estimates.size(); ++k)
      results.emplace_back("fixed." + std::to_string(k), format_real(fit.fixed_estimates[k]));
    if (a.fixed == "intercept" && fit.fixed_estimates.size() == 1)
      results.emplace_back("intercept", format_real(fit.fixed_estimates[0]));
  };

  if (a.method == "ls-scan") {
    const ScanResult scan = ls_scan(W, X, data.y, threads);
    Vector est = scan.estimate, se = scan.se, tstat = scan.tstat;
    for (Eigen::Index j = 0; j < est.size(); ++j)
      if (!scan.defined[static_cast<size_t>(j)])
        est[j] = se[j] = tstat[j] = std::numeric_limits<double>::quiet_NaN();
    write_table(a.out_effects,
                effects_table(W.marker_ids, {{"estimate", est}, {"se", se}, {"tstat", tstat}}));
    write_meta(a.out_meta, echo, results);
  } else if (a.method == "snp-blup") {
    const ModelFit fit = snp_blup(W, X, data.y, vc);
    std::vector<std::pair<std::string, Vector>> cols = {{"estimate", fit.random_estimates}};
    if (fit.random_sd.size() > 0) cols.emplace_back("sd", fit.random_sd);
    write_table(a.out_effects, effects_table(W.marker_ids, cols));
    record_fixed(fit);
    results.emplace_back("lambda", format_real(vc.lambda()));
    write_meta(a.out_meta, echo, results);
  } else if (a.method == "gblup") {
    const RelationshipMatrix G = genomic_relationship(W, a.grm == "centered");
    const ModelFit fit = gblup(G, X, data.y, vc);
    std::vector<std::pair<std::string, Vector>> cols = {{"estimate", fit.random_estimates}};
    if (fit.random_sd.size() > 0) cols.emplace_back("sd", fit.random_sd);
    write_table(a.out_effects, effects_table(W.individual_ids, cols));
    record_fixed(fit);
    write_meta(a.out_meta, echo, results);
  } else if (a.method == "sire-blup") {
    if (a.groups.empty()) throw std::runtime_error("sire-blup needs --groups (id -> family file)");
    const IncidenceMatrix Z = read_groups(a.groups, W.individual_ids);
    const FamilySummary fams = FamilySummary::from_records(data.y, Z);
    const Vector s = sire_blup_closed_form(fams, vc.lambda());
    write_table(a.out_effects, effects_table(Z.level_ids, {{"estimate", s},
                                                           {"count", fams.counts},
                                                           {"mean", fams.means}}));
    results.emplace_back("lambda", format_real(vc.lambda()));
    write_meta(a.out_meta, echo, results);
  } else if (a.method == "bayes-a" || a.method == "bayes-b") {
    double scale = a.scale;
    if (a.genetic_variance > 0.0) {
      // Prior mean of each locus variance df*s/(df-2) targets the requested
      // total genetic variance spread over the (included) loci.
      if (a.df <= 2.0) throw std::runtime_error("--genetic-variance needs --df > 2");
      const double denom = expected_genetic_variance(allele_frequencies(W), 1.0) *
                           (a.method == "bayes-b" ? a.q : 1.0);
      if (denom <= 0.0) throw std::runtime_error("cannot target genetic variance: no variation");
      scale = a.genetic_variance * (a.df - 2.0) / (a.df * denom);
    }
    BayesOptions opts;
    opts.sigma_e2 = a.sigma_e2;
    opts.sample_sigma_e = !a.fix_sigma_e;
    opts.pin_marker_variance = a.pin_variance;
    ChainConfig cfg;
    cfg.iterations = a.iterations;
    cfg.burn_in = a.burn_in;
    cfg.thinning = a.thinning;
    cfg.seed = seed;
    cfg.chain_count = a.chains;
    const Matrix Wd = impute_missing(W);
    const PosteriorSummary summary =
        a.method == "bayes-a"
            ? bayes_a(Wd, X, data.y, ScaledInvChiSqPrior{a.df, scale}, opts, cfg)
            : bayes_b(Wd, X, data.y, SpikeSlabPrior{a.q, a.df, scale}, opts, cfg);
    write_bayes_outputs(a, summary, W.marker_ids, echo);
  } else {
    throw std::runtime_error("unknown --method '" + a.method + "'");
  }
  std::cout << "fit: wrote " << a.out_effects << "\n";
  return 0;
}

// ---- predict ----

struct PredictArgs {
  std::string effects, genotypes, meta, out;
};

int run_predict(const PredictArgs& a, const std::string& echo) {
  const Table t = read_table(a.effects);
  const Eigen::Index col = find_column(t, "estimate", a.effects);
  ModelFit fit;
  fit.method = "file";
  fit.random_estimates = t.values.col(col);
  fit.effect_ids = t.ids;
  const GenotypeMatrix W = read_genotypes(a.genotypes);

  double intercept = 0.0;
  bool have_intercept = false;
  if (!a.meta.empty()) {
    for (const auto& [k, v] : read_keyvalue(a.meta))
      if (k == "intercept") {
        intercept = parse_real(v);
        have_intercept = true;
      }
  }
  FixedDesign X_new = FixedDesign::none(W.n());
  if (have_intercept) {
    fit.fixed_estimates = Vector::Constant(1, intercept);
    X_new = FixedDesign::intercept(W.n());
  }
  const PhenotypeVector yhat = predict(fit, W, X_new);
  write_table(a.out, effects_table(W.individual_ids, {{"yhat", yhat.y}}));
  write_meta(a.out + ".meta", echo, {{"intercept_applied", have_intercept ? "1" : "0"}});
  std::cout << "predict: wrote " << a.out << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string mode = "accuracy";
  std::string truth, estimates;
  std::string truth_column = "effect", estimate_column = "estimate";
  std::vector<double> thresholds = {0.0, 1.0, 2.0, 3.0};
  bool one_sided = false;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a, const std::string& echo) {
  const Table truth = read_table(a.truth);
  const Table est = read_table(a.estimates);
  Vector t, e;
  join_by_id(truth, find_column(truth, a.truth_column, a.truth), est,
             find_column(est, a.estimate_column, a.estimates), t, e);

  if (a.mode == "accuracy") {
    const AccuracyReport rep = accuracy_report(t, e);
    MetricRows rows;
    rows.add("n", static_cast<double>(rep.n));
    rows.add("correlation", rep.correlation);
    rows.add("slope", rep.slope);
    rows.add("mse", rep.mse);
    write_table(a.out, rows.table(), ',');
  } else if (a.mode == "selection") {
    Table out("threshold",
              {"count", "mean_abs_estimate", "mean_abs_truth", "slope", "slope_se"},
              static_cast<Eigen::Index>(a.thresholds.size()));
    for (size_t i = 0; i < a.thresholds.size(); ++i) {
      const SelectionBiasReport rep =
          selection_bias_report(t, e, a.thresholds[i], !a.one_sided);
      out.ids[i] = format_real(rep.threshold);
      out.values.row(static_cast<Eigen::Index>(i)) << static_cast<double>(rep.count),
          rep.mean_abs_estimate, rep.mean_abs_truth, rep.slope, rep.slope_se;
    }
    write_table(a.out, out, ',');
  } else {
    throw std::runtime_error("unknown --mode '" + a.mode + "' (use accuracy or selection)");
  }
  write_meta(a.out + ".meta", echo, {});
  std::cout << "evaluate: wrote " << a.out << "\n";
  return 0;
}

// ---- experiments ----

struct Fig1Args {
  double b = 1.0, se = 1.0, threshold = 2.0;
  long replicates = 1000000;
  std::string out, out_hist;
};

int run_fig1(const Fig1Args& a, std::uint64_t seed, const std::string& echo) {
  const TruncationResult res =
      truncation_experiment(a.b, a.se, a.threshold, a.replicates, seed);
  MetricRows rows;
  rows.add("replicates", static_cast<double>(res.replicates));
  rows.add("selected", static_cast<double>(res.selected));
  rows.add("mean_significant_estimate", res.mc_mean);
  rows.add("analytic_truncated_mean", res.analytic_mean);
  write_table(a.out, rows.table(), ',');
  write_meta(a.out + ".meta", echo, {});

  if (!a.out_hist.empty()) {
    // Histogram of the estimates, total and selected-only, for plotting.
    const int bins = 80;
    const double lo = a.b - 4.0 * a.se, hi = a.b + 4.0 * a.se;
    const double width = (hi - lo) / bins;
    std::vector<long> all(bins, 0), sel(bins, 0);
    for (long r = 0; r < a.replicates; ++r) {
      Rng rng = substream(seed, stream::kReplicate, static_cast<std::uint64_t>(r));
      const double estimate = a.b + a.se * rng.normal();
      const int bin = static_cast<int>(std::floor((estimate - lo) / width));
      if (bin < 0 || bin >= bins) continue;
      ++all[static_cast<size_t>(bin)];
      if (estimate > a.threshold) ++sel[static_cast<size_t>(bin)];
    }
    Table h("bin", {"lo", "hi", "count_all", "count_selected"}, bins);
    for (int bi = 0; bi < bins; ++bi) {
      h.ids[static_cast<size_t>(bi)] = std::to_string(bi);
      h.values.row(bi) << lo + bi * width, lo + (bi + 1) * width,
          static_cast<double>(all[static_cast<size_t>(bi)]),
          static_cast<double>(sel[static_cast<size_t>(bi)]);
    }
    write_table(a.out_hist, h, ',');
  }
  std::cout << "fig1: mean significant estimate = " << format_real(res.mc_mean)
            << " (analytic " << format_real(res.analytic_mean) << ", " << res.selected
            << " of " << res.replicates << " selected)\n";
  return 0;
}

struct Fig2Args {
  long markers = 100000;
  double sigma_b2 = 0.5, sigma_err2 = 0.5, threshold = 2.5;
  long min_selected = 200, max_replicates = 1000;
  std::string out, out_scatter;
};

int run_fig2(const Fig2Args& a, std::uint64_t seed, const std::string& echo) {
  const double lambda = a.sigma_err2 / a.sigma_b2;
  std::vector<double> truth_acc, ls_acc;
  long selected = 0, reps = 0;
  while (selected < a.min_selected && reps < a.max_replicates) {
    const MarkerScanData scan = simulate_marker_scan(
        a.markers, a.sigma_b2, a.sigma_err2, chain_seed(seed, static_cast<std::uint64_t>(reps)));
    for (Eigen::Index j = 0; j < a.markers; ++j) {
      truth_acc.push_back(scan.b_true[j]);
      ls_acc.push_back(scan.b_tilde[j]);
      if (std::abs(scan.b_tilde[j]) > a.threshold) ++selected;
    }
    ++reps;
  }
  if (selected < a.min_selected)
    throw std::runtime_error("fig2: selection target not reached in " +
                             std::to_string(a.max_replicates) + " replicates");
  const auto total = static_cast<Eigen::Index>(truth_acc.size());
  const Vector truth = Eigen::Map<Vector>(truth_acc.data(), total);
  const Vector ls = Eigen::Map<Vector>(ls_acc.data(), total);
  const Vector shrunk = shrink_ls(ls, lambda);

  const SelectionBiasReport rep_ls = selection_bias_report(truth, ls, a.threshold, true);
  const SelectionBiasReport rep_shrunk =
      selection_bias_report(truth, shrunk, a.threshold / (1.0 + lambda), true);

  MetricRows rows;
  rows.add("replicates", static_cast<double>(reps));
  rows.add("markers_per_replicate", static_cast<double>(a.markers));
  rows.add("selected", static_cast<double>(rep_ls.count));
  rows.add("lambda", lambda);
  rows.add("threshold", a.threshold);
  rows.add("slope_truth_on_ls", rep_ls.slope);
  rows.add("slope_truth_on_ls_se", rep_ls.slope_se);
  rows.add("slope_truth_on_shrunk", rep_shrunk.slope);
  rows.add("slope_truth_on_shrunk_se", rep_shrunk.slope_se);
  rows.add("mean_abs_truth_selected", rep_ls.mean_abs_truth);
  rows.add("mean_abs_ls_selected", rep_ls.mean_abs_estimate);
  rows.add("mean_abs_shrunk_selected", rep_shrunk.mean_abs_estimate);
  write_table(a.out, rows.table(), ',');
  write_meta(a.out + ".meta", echo, {});

  if (!a.out_scatter.empty()) {
    std::vector<Eigen::Index> sel;
    for (Eigen::Index j = 0; j < total; ++j)
      if (std::abs(ls[j]) > a.threshold) sel.push_back(j);
    Table s("marker", {"truth", "ls", "shrunk"}, static_cast<Eigen::Index>(sel.size()));
    for (size_t k = 0; k < sel.size(); ++k) {
      s.ids[k] = std::to_string(sel[k]);
      s.values.row(static_cast<Eigen::Index>(k)) << truth[sel[k]], ls[sel[k]], shrunk[sel[k]];
    }
    write_table(a.out_scatter, s, ',');
  }
  std::cout << "fig2: slope(truth~ls) = " << format_real(rep_ls.slope)
            << ", slope(truth~shrunk) = " << format_real(rep_shrunk.slope) << " ("
            << rep_ls.count << " selected)\n";
  return 0;
}

struct EquivArgs {
  long n = 50, p = 200;
  double sigma_b2 = 0.04, sigma_e2 = 1.0;
  double tolerance = 1e-8;
  std::string out;
};

int run_equivalence(const EquivArgs& a, std::uint64_t seed, const std::string& echo) {
  SimulationRecipe recipe;
  recipe.n = a.n;
  recipe.p = a.p;
  recipe.prior = NormalPrior{a.sigma_b2};
  recipe.sigma_e2 = a.sigma_e2;
  recipe.seed = seed;
  const SimulatedDataset data = simulate_dataset(recipe);
  const FixedDesign X = FixedDesign::intercept(data.W.n());
  const VarianceComponents vc{a.sigma_e2, a.sigma_b2};

  const ModelFit fit_snp = snp_blup(data.W, X, data.y.y, vc);
  RelationshipMatrix G = genomic_relationship(data.W, false);
  const ModelFit fit_g = gblup(G, X, data.y.y, vc);
  const EquivalenceReport rep = estimator_equivalence(fit_snp, fit_g, a.tolerance);

  MetricRows rows;
  rows.add("n", static_cast<double>(a.n));
  rows.add("p", static_cast<double>(a.p));
  rows.add("max_abs_diff", rep.max_abs_diff);
  rows.add("mean_abs_diff", rep.mean_abs_diff);
  rows.add("tolerance", a.tolerance);
  rows.add("pass", rep.pass ? 1.0 : 0.0);
  write_table(a.out, rows.table(), ',');
  write_meta(a.out + ".meta", echo, {});
  std::cout << "equivalence: max abs difference = " << format_real(rep.max_abs_diff)
            << (rep.pass ? " (pass)" : " (FAIL)") << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Genomic prediction: simulation, BLUP/Bayesian fitting, and selection-bias "
               "experiments"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  int threads = 1;
  app.add_option("--seed", seed, "Master seed; all randomness derives from it")
      ->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for marker-parallel scans")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.set_config("--config", "", "Read key=value configuration (flags override the file)");

  // simulate
  SimulateArgs sim;
  CLI::App* csim = app.add_subcommand("simulate", "Generate genotypes, effects and phenotypes");
  csim->configurable();
  csim->add_option("--n", sim.n, "Individuals")->required()->check(CLI::PositiveNumber);
  csim->add_option("--p", sim.p, "Markers")->required()->check(CLI::PositiveNumber);
  csim->add_option("--maf-low", sim.maf_low, "Lower allele-frequency bound")
      ->capture_default_str();
  csim->add_option("--maf-high", sim.maf_high, "Upper allele-frequency bound")
      ->capture_default_str();
  csim->add_option("--prior", sim.prior, "Effect prior: normal, scaled-inv-chi2, spike-slab")
      ->check(CLI::IsMember({"normal", "scaled-inv-chi2", "spike-slab"}))
      ->capture_default_str();
  csim->add_option("--sigma-b2", sim.sigma_b2, "Effect variance (normal prior)")
      ->capture_default_str();
  csim->add_option("--df", sim.df, "Prior degrees of freedom")->capture_default_str();
  csim->add_option("--scale", sim.scale, "Prior scale")->capture_default_str();
  csim->add_option("--q", sim.q, "Nonzero-effect proportion (spike-slab)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  csim->add_option("--sigma-e2", sim.sigma_e2, "Residual variance")->capture_default_str();
  csim->add_option("--covariates", sim.covariates, "Generated fixed-effect covariates")
      ->capture_default_str();
  csim->add_option("--out-prefix", sim.out_prefix, "Output path prefix")->required();

  // fit
  FitArgs fit;
  CLI::App* cfit = app.add_subcommand("fit", "Estimate marker or group effects");
  cfit->configurable();
  cfit->add_option("--method", fit.method,
                   "ls-scan, shrink, snp-blup, gblup, sire-blup, bayes-a, bayes-b")
      ->required()
      ->check(CLI::IsMember(
          {"ls-scan", "shrink", "snp-blup", "gblup", "sire-blup", "bayes-a", "bayes-b"}));
  cfit->add_option("--genotypes", fit.genotypes, "Genotype file");
  cfit->add_option("--phenotypes", fit.phenotypes, "Phenotype file");
  cfit->add_option("--groups", fit.groups, "id -> family file (sire-blup)");
  cfit->add_option("--effects-in", fit.effects_in, "Effects file to shrink (shrink)");
  cfit->add_option("--fixed", fit.fixed, "Fixed part: none or intercept")
      ->check(CLI::IsMember({"none", "intercept"}))
      ->capture_default_str();
  cfit->add_option("--grm", fit.grm, "Relationship matrix: centered or raw (gblup)")
      ->check(CLI::IsMember({"centered", "raw"}))
      ->capture_default_str();
  cfit->add_option("--sigma-e2", fit.sigma_e2, "Residual variance")->capture_default_str();
  cfit->add_option("--sigma-u2", fit.sigma_u2, "Random-effect variance")->capture_default_str();
  cfit->add_option("--lambda", fit.lambda, "Shrinkage ratio (shrink; overrides variances)");
  cfit->add_option("--q", fit.q, "Nonzero-effect proportion (bayes-b)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cfit->add_option("--df", fit.df, "Effect-variance prior df (bayes)")->capture_default_str();
  cfit->add_option("--scale", fit.scale, "Effect-variance prior scale (bayes)")
      ->capture_default_str();
  cfit->add_option("--genetic-variance", fit.genetic_variance,
                   "Target total genetic variance; derives --scale (bayes)");
  cfit->add_option("--iterations", fit.iterations, "MCMC iterations")->capture_default_str();
  cfit->add_option("--burn-in", fit.burn_in, "MCMC burn-in")->capture_default_str();
  cfit->add_option("--thinning", fit.thinning, "Keep every k-th draw")->capture_default_str();
  cfit->add_option("--chains", fit.chains, "Chain count")->capture_default_str();
  cfit->add_flag("--pin-variance", fit.pin_variance,
                 "Hold per-locus variances at the prior scale (bayes)");
  cfit->add_flag("--fix-sigma-e", fit.fix_sigma_e, "Hold sigma_e2 fixed (bayes)");
  cfit->add_option("--out-effects", fit.out_effects, "Effects output file")->required();
  cfit->add_option("--out-meta", fit.out_meta, "Metadata output (default <out-effects>.meta)");
  cfit->add_option("--out-trace", fit.out_trace, "Thinned-trace output (bayes)");

  // predict
  PredictArgs pred;
  CLI::App* cpred = app.add_subcommand("predict", "Apply fitted effects to new genotypes");
  cpred->configurable();
  cpred->add_option("--effects", pred.effects, "Effects file from fit")->required();
  cpred->add_option("--genotypes", pred.genotypes, "New genotype file")->required();
  cpred->add_option("--meta", pred.meta, "Fit metadata (recovers the intercept)");
  cpred->add_option("--out", pred.out, "Predictions output file")->required();

  // evaluate
  EvaluateArgs ev;
  CLI::App* cev = app.add_subcommand("evaluate", "Accuracy and selection-bias reports");
  cev->configurable();
  cev->add_option("--mode", ev.mode, "accuracy or selection")
      ->check(CLI::IsMember({"accuracy", "selection"}))
      ->capture_default_str();
  cev->add_option("--truth", ev.truth, "Truth file (id + value column)")->required();
  cev->add_option("--estimates", ev.estimates, "Estimate/prediction file")->required();
  cev->add_option("--truth-column", ev.truth_column, "Truth column name")->capture_default_str();
  cev->add_option("--estimate-column", ev.estimate_column, "Estimate column name")
      ->capture_default_str();
  cev->add_option("--thresholds", ev.thresholds, "Selection thresholds (selection mode)")
      ->capture_default_str();
  cev->add_flag("--one-sided", ev.one_sided, "Select estimate > t instead of |estimate| > t");
  cev->add_option("--out", ev.out, "Report output file (CSV)")->required();

  // experiment
  CLI::App* cexp = app.add_subcommand("experiment", "Canned selection-bias experiments");
  cexp->require_subcommand(1);
  Fig1Args f1;
  CLI::App* cf1 = cexp->add_subcommand(
      "fig1", "Repeated single-marker estimation with significance selection");
  cf1->configurable();
  cf1->add_option("--b", f1.b, "True effect")->capture_default_str();
  cf1->add_option("--se", f1.se, "Standard error of the estimate")->capture_default_str();
  cf1->add_option("--threshold", f1.threshold, "Selection threshold")->capture_default_str();
  cf1->add_option("--replicates", f1.replicates, "Replicates")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cf1->add_option("--out", f1.out, "Report output (CSV)")->required();
  cf1->add_option("--out-hist", f1.out_hist, "Histogram output (CSV)");

  Fig2Args f2;
  CLI::App* cf2 = cexp->add_subcommand(
      "fig2", "Genome-scan selection: least-squares vs shrunk estimates");
  cf2->configurable();
  cf2->add_option("--markers", f2.markers, "Markers per replicate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cf2->add_option("--sigma-b2", f2.sigma_b2, "True effect variance")->capture_default_str();
  cf2->add_option("--sigma-err2", f2.sigma_err2, "Sampling-error variance")
      ->capture_default_str();
  cf2->add_option("--threshold", f2.threshold, "Selection threshold on the scan estimate")
      ->capture_default_str();
  cf2->add_option("--min-selected", f2.min_selected, "Accumulate replicates until this count")
      ->capture_default_str();
  cf2->add_option("--max-replicates", f2.max_replicates, "Replicate cap")->capture_default_str();
  cf2->add_option("--out", f2.out, "Report output (CSV)")->required();
  cf2->add_option("--out-scatter", f2.out_scatter, "Selected-marker scatter output (CSV)");

  EquivArgs eq;
  CLI::App* ceq = cexp->add_subcommand(
      "equivalence", "Marker-effect model vs relationship-matrix model identity");
  ceq->configurable();
  ceq->add_option("--n", eq.n, "Individuals")->check(CLI::PositiveNumber)->capture_default_str();
  ceq->add_option("--p", eq.p, "Markers")->check(CLI::PositiveNumber)->capture_default_str();
  ceq->add_option("--sigma-b2", eq.sigma_b2, "Per-marker effect variance")->capture_default_str();
  ceq->add_option("--sigma-e2", eq.sigma_e2, "Residual variance")->capture_default_str();
  ceq->add_option("--tolerance", eq.tolerance, "Max-abs-difference tolerance")
      ->capture_default_str();
  ceq->add_option("--out", eq.out, "Report output (CSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const std::string echo = app.config_to_str(true, false);
    if (fit.out_meta.empty()) fit.out_meta = fit.out_effects + ".meta";
    if (app.got_subcommand(csim)) return run_simulate(sim, seed, echo);
    if (app.got_subcommand(cfit)) return run_fit(fit, seed, threads, echo);
    if (app.got_subcommand(cpred)) return run_predict(pred, echo);
    if (app.got_subcommand(cev)) return run_evaluate(ev, echo);
    if (app.got_subcommand(cexp)) {
      if (cexp->got_subcommand(cf1)) return run_fig1(f1, seed, echo);
      if (cexp->got_subcommand(cf2)) return run_fig2(f2, seed, echo);
      if (cexp->got_subcommand(ceq)) return run_equivalence(eq, seed, echo);
    }
    throw std::runtime_error("no subcommand executed");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("gpred");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gpred::cli
