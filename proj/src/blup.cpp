#include "gpred/blup.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace gpred {

namespace {

// Absorbs the fixed part: residualize(v) = v - X (X'X)^-1 X' v. Factored
// once; rejects rank-deficient X naming the dependent columns.
struct FixedProjector {
  Matrix X;
  Eigen::ColPivHouseholderQR<Matrix> qr;

  explicit FixedProjector(const Matrix& X_in) : X(X_in) {
    if (X.cols() == 0) return;
    qr.compute(X);
    if (qr.rank() < X.cols()) {
      const auto& perm = qr.colsPermutation().indices();
      std::string cols;
      for (Eigen::Index k = qr.rank(); k < X.cols(); ++k)
        cols += (cols.empty() ? "" : ", ") + std::to_string(perm[k]);
      throw std::invalid_argument("fixed-effect design is rank deficient (dependent columns: " +
                                  cols + ")");
    }
  }

  bool active() const { return X.cols() > 0; }

  Vector coef(const Vector& v) const { return qr.solve(v); }

  Vector residualize(const Vector& v) const {
    if (!active()) return v;
    return v - X * qr.solve(v);
  }
};

// Jacobi-preconditioned CG on an SPD operator given as a matvec closure.
Vector cg_solve(Eigen::Index dim, const std::function<Vector(const Vector&)>& matvec,
                const Vector& rhs, const Vector& diag, double rel_tol, long max_iter) {
  Vector x = Vector::Zero(dim);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return x;
  Vector inv_diag = diag.cwiseMax(std::numeric_limits<double>::min()).cwiseInverse();
  Vector r = rhs;
  Vector z = inv_diag.cwiseProduct(r);
  Vector d = z;
  double rz = r.dot(z);
  for (long it = 0; it < max_iter; ++it) {
    if (r.norm() <= rel_tol * rhs_norm) return x;
    Vector Ad = matvec(d);
    const double dAd = d.dot(Ad);
    if (!(dAd > 0.0)) throw std::runtime_error("cg_solve: operator is not positive definite");
    const double alpha = rz / dAd;
    x += alpha * d;
    r -= alpha * Ad;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  if (r.norm() <= rel_tol * rhs_norm) return x;
  throw std::runtime_error("cg_solve: no convergence within " + std::to_string(max_iter) +
                           " iterations");
}

void check_lengths(const FixedDesign& X, const Vector& y, Eigen::Index n, const char* where) {
  if (y.size() != n) throw std::invalid_argument(std::string(where) + ": y length mismatch");
  if (X.X.rows() != 0 && X.X.rows() != n)
    throw std::invalid_argument(std::string(where) + ": fixed design row count mismatch");
  if (X.X.rows() == 0 && X.X.cols() > 0)
    throw std::invalid_argument(std::string(where) + ": fixed design has columns but no rows");
}

}  // namespace

FamilySummary FamilySummary::from_records(const Vector& y, const IncidenceMatrix& families) {
  families.validate();
  if (y.size() != families.n())
    throw std::invalid_argument("FamilySummary: record count mismatch");
  FamilySummary out;
  out.counts = Vector::Zero(families.levels);
  out.means = Vector::Zero(families.levels);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int l = families.level[i];
    if (l < 0) continue;
    out.counts[l] += 1.0;
    out.means[l] += y[i];
  }
  for (int l = 0; l < families.levels; ++l)
    if (out.counts[l] > 0.0) out.means[l] /= out.counts[l];
  return out;
}

Vector sire_blup_closed_form(const FamilySummary& fams, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("sire_blup_closed_form: lambda must be >= 0");
  if (fams.counts.size() != fams.means.size())
    throw std::invalid_argument("sire_blup_closed_form: summary size mismatch");
  Vector s(fams.counts.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double n = fams.counts[i];
    s[i] = (n > 0.0) ? fams.means[i] * n / (n + lambda) : 0.0;
  }
  return s;
}

double best_predict_family_future(const Vector& y_existing, double sigma_s2, double sigma_e2) {
  if (!(sigma_s2 >= 0.0) || !(sigma_e2 >= 0.0))
    throw std::invalid_argument("best_predict_family_future: variances must be >= 0");
  const Eigen::Index m = y_existing.size();
  if (m == 0) return 0.0;  // no data: best prediction is the mean, 0
  if (sigma_s2 == 0.0) return 0.0;
  if (sigma_e2 == 0.0) return y_existing.mean();  // records equal s exactly
  // v' V^-1 y; V = I*sigma_e2 + J*sigma_s2 has the closed inverse
  // (I - J*sigma_s2/(sigma_e2 + m*sigma_s2)) / sigma_e2.
  const double sum = y_existing.sum();
  return sigma_s2 * (sum - static_cast<double>(m) * sigma_s2 * sum /
                               (sigma_e2 + static_cast<double>(m) * sigma_s2)) /
         sigma_e2;
}

ModelFit solve_mme(const FixedDesign& X, const IncidenceMatrix& Z, const Vector& y,
                   const Matrix& Kinv, double lambda, const VarianceComponents& vc,
                   const SolveOptions& opts) {
  Z.validate();
  const Eigen::Index n = Z.n();
  check_lengths(X, y, n, "solve_mme");
  const Eigen::Index c = X.c();
  const Eigen::Index f = Z.levels;
  if (Kinv.rows() != f || Kinv.cols() != f)
    throw std::invalid_argument("solve_mme: Kinv must be levels x levels");
  if (!Kinv.isApprox(Kinv.transpose(), 1e-10))
    throw std::invalid_argument("solve_mme: Kinv is not symmetric");
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve_mme: lambda must be >= 0");
  if (c > 0) {
    const FixedProjector rank_check(X.X);  // rank check only
  }

  // Assemble the coefficient matrix directly from the level indices; Z is
  // never materialized.
  const Eigen::Index dim = c + f;
  Matrix C = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  if (c > 0) {
    C.topLeftCorner(c, c) = X.X.transpose() * X.X;
    rhs.head(c) = X.X.transpose() * y;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = Z.level[i];
    if (l < 0) continue;
    C(c + l, c + l) += 1.0;
    rhs[c + l] += y[i];
    for (Eigen::Index k = 0; k < c; ++k) {
      C(k, c + l) += X.X(i, k);
      C(c + l, k) += X.X(i, k);
    }
  }
  C.bottomRightCorner(f, f) += lambda * Kinv;

  Eigen::LDLT<Matrix> ldlt(C);
  Vector sol = ldlt.solve(rhs);
  if ((C * sol - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm()))
    throw std::runtime_error("solve_mme: system is singular or badly conditioned");

  ModelFit fit;
  fit.method = "mme";
  fit.fixed_estimates = sol.head(c);
  fit.random_estimates = sol.tail(f);
  fit.variance_components = vc;
  fit.effect_ids = Z.level_ids;
  if (opts.compute_sd && vc.sigma_e2 > 0.0 && dim <= opts.direct_limit) {
    // Prediction-error variance is sigma_e2 * diag of the random block of C^-1.
    Matrix Cinv = ldlt.solve(Matrix::Identity(dim, dim));
    fit.random_sd = (vc.sigma_e2 * Cinv.diagonal().tail(f).cwiseMax(0.0)).cwiseSqrt();
  }
  fit.fitted_genetic_values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    fit.fitted_genetic_values[i] = Z.level[i] >= 0 ? fit.random_estimates[Z.level[i]] : 0.0;
  return fit;
}

ModelFit snp_blup(const Matrix& W, const FixedDesign& X, const Vector& y,
                  const VarianceComponents& vc, const SolveOptions& opts) {
  const Eigen::Index n = W.rows();
  const Eigen::Index p = W.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("snp_blup: empty design");
  check_lengths(X, y, n, "snp_blup");
  vc.validate();
  if (vc.sigma_u2 <= 0.0)
    throw std::invalid_argument("snp_blup: marker variance must be > 0");
  const double lambda = vc.lambda();

  FixedProjector proj(X.X);
  const Vector y_adj = proj.residualize(y);

  const bool want_direct =
      opts.solver == SolverChoice::Direct ||
      (opts.solver == SolverChoice::Auto && std::min(n, p) <= opts.direct_limit);

  ModelFit fit;
  fit.method = "snp-blup";
  fit.variance_components = vc;
  Vector b(p);

  if (want_direct && p <= n) {
    // Primal p x p system.
    Matrix Wt = W;
    if (proj.active())
      for (Eigen::Index j = 0; j < p; ++j) Wt.col(j) = proj.residualize(W.col(j));
    Matrix A = Wt.transpose() * Wt;
    A.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("snp_blup: normal equations not positive definite");
    b = llt.solve(Wt.transpose() * y_adj);
    if (opts.compute_sd) {
      Matrix Ainv = llt.solve(Matrix::Identity(p, p));
      fit.random_sd = (vc.sigma_e2 * Ainv.diagonal().cwiseMax(0.0)).cwiseSqrt();
    }
  } else if (want_direct) {
    // Dual n x n system: b = W~' (W~ W~' + lambda I)^-1 y~.
    Matrix Wt = W;
    if (proj.active())
      for (Eigen::Index j = 0; j < p; ++j) Wt.col(j) = proj.residualize(W.col(j));
    Matrix B = Wt * Wt.transpose();
    B.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(B);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("snp_blup: dual system not positive definite");
    Vector alpha = llt.solve(y_adj);
    b = Wt.transpose() * alpha;
    // diag((A'A + lI)^-1) = (1 - diag(A' B^-1 A)) / l; only affordable when
    // p * n^2 stays modest.
    if (opts.compute_sd && static_cast<double>(p) * static_cast<double>(n) * n <= 2e9) {
      Matrix Binv_Wt = llt.solve(Wt);
      Vector diag(p);
      for (Eigen::Index j = 0; j < p; ++j)
        diag[j] = (1.0 - Wt.col(j).dot(Binv_Wt.col(j))) / lambda;
      fit.random_sd = (vc.sigma_e2 * diag.cwiseMax(0.0)).cwiseSqrt();
    }
  } else {
    // Matrix-free CG on the primal system; M is applied on the fly so the
    // projected design is never stored.
    auto matvec = [&](const Vector& t) -> Vector {
      Vector u = proj.residualize(W * t);
      return (W.transpose() * u) + lambda * t;
    };
    Vector diag(p);
    for (Eigen::Index j = 0; j < p; ++j)
      diag[j] = proj.residualize(W.col(j)).squaredNorm() + lambda;
    b = cg_solve(p, matvec, W.transpose() * y_adj, diag, opts.cg_rel_tol, opts.cg_max_iter);
  }

  fit.random_estimates = b;
  if (proj.active()) fit.fixed_estimates = proj.coef(y - W * b);
  fit.fitted_genetic_values = W * b;
  return fit;
}

ModelFit snp_blup(const GenotypeMatrix& W, const FixedDesign& X, const Vector& y,
                  const VarianceComponents& vc, const SolveOptions& opts) {
  W.validate();
  ModelFit fit = snp_blup(impute_missing(W), X, y, vc, opts);
  fit.effect_ids = W.marker_ids;
  fit.individual_ids = W.individual_ids;
  return fit;
}

ModelFit gblup(const RelationshipMatrix& G, const FixedDesign& X, const Vector& y,
               const VarianceComponents& vc, const SolveOptions& opts) {
  const Eigen::Index n = G.K.rows();
  if (G.K.cols() != n || n < 1) throw std::invalid_argument("gblup: K must be square");
  check_lengths(X, y, n, "gblup");
  vc.validate();
  if (vc.sigma_u2 <= 0.0) throw std::invalid_argument("gblup: genetic variance must be > 0");
  check_symmetric_psd(G.K);

  const Matrix C = vc.sigma_u2 * G.K;          // cov(g)
  Matrix V = C;                                 // cov(y) given fixed effects
  V.diagonal().array() += vc.sigma_e2;
  Eigen::LLT<Matrix> llt(V);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gblup: phenotypic covariance not positive definite");

  const Eigen::Index c = X.c();
  Vector chat(c);
  Vector resid = y;
  Matrix XtVinvX;  // kept for the PEV correction below
  Matrix VinvX;
  if (c > 0) {
    FixedProjector proj(X.X);  // rank check only
    VinvX = llt.solve(X.X);
    XtVinvX = X.X.transpose() * VinvX;
    chat = XtVinvX.ldlt().solve(X.X.transpose() * llt.solve(y));
    resid = y - X.X * chat;
  }
  Vector Vinv_resid = llt.solve(resid);
  Vector a = C * Vinv_resid;

  ModelFit fit;
  fit.method = "gblup";
  fit.fixed_estimates = chat;
  fit.random_estimates = a;
  fit.fitted_genetic_values = a;
  fit.effect_ids = G.ids;
  fit.individual_ids = G.ids;
  fit.variance_components = vc;
  if (opts.compute_sd && n <= opts.direct_limit) {
    // PEV = C - C P C with P = V^-1 - V^-1 X (X'V^-1X)^-1 X'V^-1.
    Matrix VinvC = llt.solve(C);
    Matrix PEV = C - C * VinvC;
    if (c > 0) {
      Matrix XtVinvC = VinvX.transpose() * C;
      PEV += XtVinvC.transpose() * XtVinvX.ldlt().solve(XtVinvC);
    }
    fit.random_sd = PEV.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

ScanResult ls_scan(const Matrix& W, const FixedDesign& X, const Vector& y, int threads) {
  const Eigen::Index n = W.rows();
  const Eigen::Index p = W.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("ls_scan: empty design");
  check_lengths(X, y, n, "ls_scan");
  const Eigen::Index c = X.c();
  if (n <= c + 1) throw std::invalid_argument("ls_scan: no residual degrees of freedom");
  if (threads < 1) throw std::invalid_argument("ls_scan: threads must be >= 1");

  FixedProjector proj(X.X);
  const Vector y_adj = proj.residualize(y);
  const double syy = y_adj.squaredNorm();
  const double df = static_cast<double>(n - c - 1);

  ScanResult out;
  out.estimate = Vector::Zero(p);
  out.se = Vector::Zero(p);
  out.tstat = Vector::Zero(p);
  out.defined.assign(static_cast<size_t>(p), false);

  // Each worker owns a contiguous marker range and writes disjoint slots, so
  // results do not depend on the thread count.
  auto run_range = [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index j = lo; j < hi; ++j) {
      const Vector wj = proj.residualize(W.col(j));
      const double sxx = wj.squaredNorm();
      if (sxx <= 1e-10 * std::max(1.0, W.col(j).squaredNorm())) continue;  // monomorphic/collinear
      const double sxy = wj.dot(y_adj);
      const double bj = sxy / sxx;
      const double rss = std::max(0.0, syy - sxy * bj);
      const double se = std::sqrt(rss / df / sxx);
      out.estimate[j] = bj;
      out.se[j] = se;
      out.tstat[j] = se > 0.0 ? bj / se : std::numeric_limits<double>::infinity();
      out.defined[static_cast<size_t>(j)] = true;
    }
  };

  const int nthreads = static_cast<int>(std::min<Eigen::Index>(threads, p));
  if (nthreads <= 1) {
    run_range(0, p);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (p + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const Eigen::Index lo = t * chunk;
      const Eigen::Index hi = std::min<Eigen::Index>(lo + chunk, p);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

ScanResult ls_scan(const GenotypeMatrix& W, const FixedDesign& X, const Vector& y, int threads) {
  W.validate();
  ScanResult out = ls_scan(impute_missing(W), X, y, threads);
  out.marker_ids = W.marker_ids;
  return out;
}

Vector shrink_ls(const Vector& b_tilde, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("shrink_ls: lambda must be >= 0");
  return b_tilde / (1.0 + lambda);
}

namespace {

// Maps design columns onto fit effects by id; identity when either side
// carries no ids (sizes must then agree).
Vector aligned_effects(const ModelFit& fit, Eigen::Index cols,
                       const std::vector<std::string>& design_ids) {
  if (design_ids.empty() || fit.effect_ids.empty()) {
    if (cols != fit.random_estimates.size())
      throw std::invalid_argument("predict: design has " + std::to_string(cols) +
                                  " effect columns but the fit has " +
                                  std::to_string(fit.random_estimates.size()));
    return fit.random_estimates;
  }
  if (static_cast<Eigen::Index>(design_ids.size()) != cols)
    throw std::invalid_argument("predict: design id count mismatch");
  std::unordered_map<std::string, Eigen::Index> index;
  for (size_t k = 0; k < fit.effect_ids.size(); ++k)
    index.emplace(fit.effect_ids[k], static_cast<Eigen::Index>(k));
  Vector est(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    auto it = index.find(design_ids[static_cast<size_t>(j)]);
    if (it == index.end())
      throw std::invalid_argument("predict: effect id '" + design_ids[static_cast<size_t>(j)] +
                                  "' is not in the fit");
    est[j] = fit.random_estimates[it->second];
  }
  return est;
}

Vector fixed_part(const ModelFit& fit, const FixedDesign& X_new, Eigen::Index n) {
  if (X_new.c() == 0) {
    if (fit.fixed_estimates.size() > 0)
      throw std::invalid_argument("predict: fit has fixed effects but no new design was given");
    return Vector::Zero(n);
  }
  if (X_new.n() != n) throw std::invalid_argument("predict: fixed design row count mismatch");
  if (X_new.c() != fit.fixed_estimates.size())
    throw std::invalid_argument("predict: fixed design column count mismatch");
  return X_new.X * fit.fixed_estimates;
}

}  // namespace

PhenotypeVector predict(const ModelFit& fit, const Matrix& design,
                        const std::vector<std::string>& design_ids, const FixedDesign& X_new) {
  const Vector est = aligned_effects(fit, design.cols(), design_ids);
  return PhenotypeVector{fixed_part(fit, X_new, design.rows()) + design * est, {}};
}

PhenotypeVector predict(const ModelFit& fit, const GenotypeMatrix& W_new,
                        const FixedDesign& X_new) {
  W_new.validate();
  PhenotypeVector out = predict(fit, impute_missing(W_new), W_new.marker_ids, X_new);
  out.ids = W_new.individual_ids;
  return out;
}

PhenotypeVector predict(const ModelFit& fit, const IncidenceMatrix& Z_new,
                        const FixedDesign& X_new) {
  Z_new.validate();
  Vector est = fit.random_estimates;
  if (!Z_new.level_ids.empty() && !fit.effect_ids.empty()) {
    std::unordered_map<std::string, Eigen::Index> index;
    for (size_t k = 0; k < fit.effect_ids.size(); ++k)
      index.emplace(fit.effect_ids[k], static_cast<Eigen::Index>(k));
    est.resize(Z_new.levels);
    for (int l = 0; l < Z_new.levels; ++l) {
      auto it = index.find(Z_new.level_ids[static_cast<size_t>(l)]);
      if (it == index.end())
        throw std::invalid_argument("predict: level id '" + Z_new.level_ids[static_cast<size_t>(l)] +
                                    "' is not in the fit");
      est[l] = fit.random_estimates[it->second];
    }
  } else if (Z_new.levels != fit.random_estimates.size()) {
    throw std::invalid_argument("predict: level count mismatch");
  }
  const Eigen::Index n = Z_new.n();
  Vector out = fixed_part(fit, X_new, n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (Z_new.level[i] >= 0) out[i] += est[Z_new.level[i]];
  return PhenotypeVector{out, {}};
}

}  // namespace gpred
