#pragma once

// Closed-form and linear-system estimators: best prediction in half-sib
// families, Henderson mixed-model equations, SNP-BLUP (ridge), GBLUP,
// per-marker least-squares scans, and scalar shrinkage.

#include "gpred/core.hpp"
#include "gpred/types.hpp"

#include <string>
#include <vector>

namespace gpred {

struct FamilySummary {
  Vector counts;  // n_i per family
  Vector means;   // defined only where counts > 0 (0 elsewhere)

  static FamilySummary from_records(const Vector& y, const IncidenceMatrix& families);
};

enum class SolverChoice { Auto, Direct, ConjugateGradient };

struct SolveOptions {
  SolverChoice solver = SolverChoice::Auto;
  Eigen::Index direct_limit = 5000;  // largest system factored densely
  double cg_rel_tol = 1e-10;
  long cg_max_iter = 100000;
  bool compute_sd = true;  // prediction-error sds, where affordable
};

// s_i = ybar_i * n_i / (n_i + lambda); empty families shrink to the prior
// mean 0. Valid for the pure y = Zs + e model (no fixed effects).
Vector sire_blup_closed_form(const FamilySummary& fams, double lambda);

// Best prediction of a future record from one family's existing records:
// v' V^-1 y with V = I*sigma_e2 + J*sigma_s2 and v = sigma_s2 * 1.
double best_predict_family_future(const Vector& y_existing, double sigma_s2, double sigma_e2);

// Henderson block system [X'X X'Z; Z'X Z'Z + Kinv*lambda]. Kinv is the
// inverse of the random-effect covariance structure (e.g. A^-1). Pass
// sigma_e2 > 0 in vc to get prediction-error sds; the default (both zero)
// records no variance components and skips sds.
ModelFit solve_mme(const FixedDesign& X, const IncidenceMatrix& Z, const Vector& y,
                   const Matrix& Kinv, double lambda,
                   const VarianceComponents& vc = VarianceComponents{0.0, 0.0},
                   const SolveOptions& opts = {});

// Ridge regression of y on all markers jointly, fixed effects absorbed by
// projection: (W'MW + lambda I) b = W'My with lambda = sigma_e2/sigma_b2.
// Uses the p x p system when p <= n, the n x n dual otherwise, and
// preconditioned CG above opts.direct_limit.
ModelFit snp_blup(const Matrix& W, const FixedDesign& X, const Vector& y,
                  const VarianceComponents& vc, const SolveOptions& opts = {});
ModelFit snp_blup(const GenotypeMatrix& W, const FixedDesign& X, const Vector& y,
                  const VarianceComponents& vc, const SolveOptions& opts = {});

// Animal-model estimate a = C V^-1 (y - X c) with C = K*sigma_u2 and
// V = C + I*sigma_e2; c is the matched GLS estimate.
ModelFit gblup(const RelationshipMatrix& G, const FixedDesign& X, const Vector& y,
               const VarianceComponents& vc, const SolveOptions& opts = {});

struct ScanResult {
  Vector estimate;
  Vector se;
  Vector tstat;
  std::vector<bool> defined;  // false for monomorphic / X-collinear markers
  std::vector<std::string> marker_ids;
};

// Per-marker OLS of y on [X w_j], one marker at a time. Parallel across
// markers; output is independent of thread count.
ScanResult ls_scan(const Matrix& W, const FixedDesign& X, const Vector& y, int threads = 1);
ScanResult ls_scan(const GenotypeMatrix& W, const FixedDesign& X, const Vector& y,
                   int threads = 1);

// Elementwise b/(1+lambda).
Vector shrink_ls(const Vector& b_tilde, double lambda);

// y_hat = X_new c_hat + design * random_estimates. When both the fit and the
// design carry ids, columns are aligned by id and unknown ids are an error.
PhenotypeVector predict(const ModelFit& fit, const Matrix& design,
                        const std::vector<std::string>& design_ids = {},
                        const FixedDesign& X_new = FixedDesign{Matrix(0, 0)});
PhenotypeVector predict(const ModelFit& fit, const GenotypeMatrix& W_new,
                        const FixedDesign& X_new = FixedDesign{Matrix(0, 0)});
PhenotypeVector predict(const ModelFit& fit, const IncidenceMatrix& Z_new,
                        const FixedDesign& X_new = FixedDesign{Matrix(0, 0)});

}  // namespace gpred
