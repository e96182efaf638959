#pragma once

// Independent reference implementations used only by tests. Each oracle
// recomputes a quantity by a different route than the library (brute-force
// enumeration, one-shot dense solves) so agreement is meaningful.

#include "gpred/types.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

using gpred::Matrix;
using gpred::Vector;

// Joint Henderson solve by explicit inversion of the full block matrix
// [X'X X'Z; Z'X Z'Z + Kinv*lambda]; returns (fixed, random) stacked.
inline Vector mme_dense(const Matrix& X, const Matrix& Z, const Vector& y, const Matrix& Kinv,
                        double lambda) {
  const Eigen::Index c = X.cols();
  const Eigen::Index f = Z.cols();
  Matrix C(c + f, c + f);
  C.topLeftCorner(c, c) = X.transpose() * X;
  C.topRightCorner(c, f) = X.transpose() * Z;
  C.bottomLeftCorner(f, c) = Z.transpose() * X;
  C.bottomRightCorner(f, f) = Z.transpose() * Z + lambda * Kinv;
  Vector rhs(c + f);
  rhs.head(c) = X.transpose() * y;
  rhs.tail(f) = Z.transpose() * y;
  return C.fullPivLu().solve(rhs);
}

// Ridge with fixed effects solved jointly (no projection): the (c+p) system
// [X'X X'W; W'X W'W + lambda I].
inline Vector ridge_joint_dense(const Matrix& X, const Matrix& W, const Vector& y,
                                double lambda) {
  Matrix Kinv = Matrix::Identity(W.cols(), W.cols());
  return mme_dense(X, W, y, Kinv, lambda);
}

// Exact kinship by enumerating every gene-drop configuration: each
// non-founder picks one of two alleles from each parent, so 4^k equally
// likely configurations determine identity-by-descent probabilities exactly.
// Returns the numerator matrix A = 2 * kinship. Parents must precede
// offspring; parent index -1 = founder allele.
inline Matrix numerator_matrix_genedrop(const std::vector<std::pair<int, int>>& parents) {
  const int n = static_cast<int>(parents.size());
  int k = 0;  // non-founders
  for (auto& [s, d] : parents)
    if (s >= 0 || d >= 0) ++k;
  if (k > 10) throw std::invalid_argument("genedrop oracle: pedigree too large");

  // Allele labels: founder alleles are globally numbered; configuration bits
  // choose which parental allele each non-founder copies.
  Matrix ibd = Matrix::Zero(n, n);
  const long configs = 1L << (2 * k);
  for (long mask = 0; mask < configs; ++mask) {
    std::vector<std::array<int, 2>> allele(static_cast<size_t>(n));
    int next_founder_allele = 0;
    int bit = 0;
    for (int i = 0; i < n; ++i) {
      const auto [s, d] = parents[static_cast<size_t>(i)];
      if (s < 0 && d < 0) {
        allele[static_cast<size_t>(i)] = {next_founder_allele, next_founder_allele + 1};
        next_founder_allele += 2;
      } else {
        if (s < 0 || d < 0) throw std::invalid_argument("genedrop oracle: one known parent");
        const int from_s = (mask >> bit) & 1;
        const int from_d = (mask >> (bit + 1)) & 1;
        bit += 2;
        allele[static_cast<size_t>(i)] = {allele[static_cast<size_t>(s)][from_s],
                                          allele[static_cast<size_t>(d)][from_d]};
      }
    }
    // P(random allele of i IBD to random allele of j) for this configuration.
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        int matches = 0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            if (allele[static_cast<size_t>(i)][a] == allele[static_cast<size_t>(j)][b]) ++matches;
        const double f = matches / 4.0;
        ibd(i, j) += f;
        if (i != j) ibd(j, i) += f;
      }
  }
  return 2.0 * ibd / static_cast<double>(configs);
}

inline double pearson(const Vector& a, const Vector& b) {
  const double am = a.mean(), bm = b.mean();
  const double sa = (a.array() - am).square().sum();
  const double sb = (b.array() - bm).square().sum();
  return ((a.array() - am) * (b.array() - bm)).sum() / std::sqrt(sa * sb);
}

inline double ols_slope(const Vector& yv, const Vector& xv) {
  const double xm = xv.mean(), ym = yv.mean();
  return ((xv.array() - xm) * (yv.array() - ym)).sum() / (xv.array() - xm).square().sum();
}

}  // namespace oracle
