#pragma once

// Domain types shared across the library. All dense linear algebra is Eigen;
// marker codes are stored as doubles (exact small integers) so genotype
// matrices plug directly into products without conversion.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gpred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// n x p marker codes in {0,1,2} (copies of the reference allele), with an
// optional missing mask. ids are optional; when present they key file I/O
// and prediction alignment.
struct GenotypeMatrix {
  Matrix codes;
  BoolArray missing;  // empty, or same shape as codes; true = missing
  std::vector<std::string> marker_ids;      // empty or size p
  std::vector<std::string> individual_ids;  // empty or size n

  Eigen::Index n() const { return codes.rows(); }
  Eigen::Index p() const { return codes.cols(); }
  bool has_missing() const { return missing.size() > 0 && missing.any(); }

  void validate() const {
    if (codes.rows() < 1 || codes.cols() < 1)
      throw std::invalid_argument("GenotypeMatrix: need n >= 1 and p >= 1");
    if (missing.size() > 0 &&
        (missing.rows() != codes.rows() || missing.cols() != codes.cols()))
      throw std::invalid_argument("GenotypeMatrix: missing mask shape mismatch");
    for (Eigen::Index j = 0; j < codes.cols(); ++j)
      for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        if (missing.size() > 0 && missing(i, j)) continue;
        const double v = codes(i, j);
        if (v != 0.0 && v != 1.0 && v != 2.0)
          throw std::invalid_argument("GenotypeMatrix: entry (" + std::to_string(i) +
                                      "," + std::to_string(j) + ") = " + std::to_string(v) +
                                      " is not a 0/1/2 code");
      }
    if (!marker_ids.empty() && static_cast<Eigen::Index>(marker_ids.size()) != codes.cols())
      throw std::invalid_argument("GenotypeMatrix: marker id count mismatch");
    if (!individual_ids.empty() && static_cast<Eigen::Index>(individual_ids.size()) != codes.rows())
      throw std::invalid_argument("GenotypeMatrix: individual id count mismatch");
  }
};

struct PhenotypeVector {
  Vector y;
  std::vector<std::string> ids;  // empty or size n

  Eigen::Index n() const { return y.size(); }

  void validate() const {
    if (!y.allFinite()) throw std::invalid_argument("PhenotypeVector: non-finite value");
    if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != y.size())
      throw std::invalid_argument("PhenotypeVector: id count mismatch");
  }
};

// Fixed-effect design; zero columns means no fixed part. Full column rank is
// checked at solve time, not here.
struct FixedDesign {
  Matrix X;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index c() const { return X.cols(); }

  static FixedDesign none(Eigen::Index n) { return FixedDesign{Matrix(n, 0)}; }
  static FixedDesign intercept(Eigen::Index n) { return FixedDesign{Matrix::Ones(n, 1)}; }
};

// Sparse 0/1 allocation of records to random-effect levels, stored as one
// level index per record (-1 = record carries no level). This representation
// enforces the at-most-one-1-per-row invariant by construction.
struct IncidenceMatrix {
  std::vector<int> level;  // size n, entries in [-1, levels)
  int levels = 0;
  std::vector<std::string> level_ids;  // empty or size levels

  Eigen::Index n() const { return static_cast<Eigen::Index>(level.size()); }

  void validate() const {
    for (int l : level)
      if (l < -1 || l >= levels)
        throw std::invalid_argument("IncidenceMatrix: level index out of range");
    if (!level_ids.empty() && static_cast<int>(level_ids.size()) != levels)
      throw std::invalid_argument("IncidenceMatrix: level id count mismatch");
  }

  Matrix to_dense() const {
    Matrix Z = Matrix::Zero(n(), levels);
    for (Eigen::Index i = 0; i < n(); ++i)
      if (level[i] >= 0) Z(i, level[i]) = 1.0;
    return Z;
  }

  // Records per level.
  Eigen::VectorXd counts() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(levels);
    for (int l : level)
      if (l >= 0) c[l] += 1.0;
    return c;
  }
};

// Residual variance plus one random-effect variance; the semantics of
// sigma_u2 (sire, animal, or per-marker) follow the model it is used with.
struct VarianceComponents {
  double sigma_e2 = 1.0;
  double sigma_u2 = 1.0;

  double lambda() const {
    if (sigma_u2 <= 0.0)
      throw std::invalid_argument("VarianceComponents: lambda undefined for sigma_u2 <= 0");
    return sigma_e2 / sigma_u2;
  }

  void validate() const {
    if (!(sigma_e2 > 0.0)) throw std::invalid_argument("VarianceComponents: sigma_e2 must be > 0");
    if (!(sigma_u2 >= 0.0)) throw std::invalid_argument("VarianceComponents: sigma_u2 must be >= 0");
  }
};

enum class RelationshipKind { PedigreeA, GenomicRaw, GenomicCentered };

struct RelationshipMatrix {
  Matrix K;
  RelationshipKind kind = RelationshipKind::GenomicRaw;
  std::vector<std::string> ids;  // empty or size n
};

// Pedigree records must be topologically ordered: parents precede offspring.
// An empty parent string or "0" means unknown.
struct Pedigree {
  struct Record {
    std::string id;
    std::string sire;  // "0" or empty = unknown
    std::string dam;
  };
  std::vector<Record> records;

  static bool known(const std::string& parent) { return !parent.empty() && parent != "0"; }
};

struct NormalPrior {
  double sigma_b2 = 1.0;
};

struct ScaledInvChiSqPrior {
  double df = 4.012;
  double scale = 1.0;
};

struct SpikeSlabPrior {
  double q = 0.05;
  double df = 4.012;
  double scale = 1.0;
};

using EffectPrior = std::variant<NormalPrior, ScaledInvChiSqPrior, SpikeSlabPrior>;

inline void validate(const EffectPrior& prior) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalPrior>) {
          if (!(p.sigma_b2 >= 0.0)) throw std::invalid_argument("NormalPrior: sigma_b2 must be >= 0");
        } else if constexpr (std::is_same_v<T, ScaledInvChiSqPrior>) {
          if (!(p.df > 0.0)) throw std::invalid_argument("ScaledInvChiSqPrior: df must be > 0");
          if (!(p.scale > 0.0)) throw std::invalid_argument("ScaledInvChiSqPrior: scale must be > 0");
        } else {
          if (!(p.q >= 0.0 && p.q <= 1.0))
            throw std::invalid_argument("SpikeSlabPrior: q must be in [0,1]");
          if (!(p.df > 0.0)) throw std::invalid_argument("SpikeSlabPrior: df must be > 0");
          if (!(p.scale > 0.0)) throw std::invalid_argument("SpikeSlabPrior: scale must be > 0");
        }
      },
      prior);
}

// Result of any fit: BLUEs of fixed effects, estimates or posterior means of
// random effects, per-effect uncertainty where the method defines one, and
// enough metadata to reproduce and to predict.
struct ModelFit {
  std::string method;
  Vector fixed_estimates;          // c x 1
  Vector random_estimates;         // per level / marker
  Vector random_sd;                // empty when the method does not define one
  Vector inclusion_prob;           // Bayes B only; empty otherwise
  Vector fitted_genetic_values;    // per training individual, when defined
  std::vector<std::string> effect_ids;      // empty or matching random_estimates
  std::vector<std::string> individual_ids;  // empty or matching fitted_genetic_values
  VarianceComponents variance_components;
  std::uint64_t seed = 0;
  int chains = 0;          // MCMC methods only
  long iterations = 0;     // MCMC methods only

  void validate() const {
    if (random_sd.size() > 0 && random_sd.size() != random_estimates.size())
      throw std::invalid_argument("ModelFit: random_sd size mismatch");
    if (!effect_ids.empty() &&
        static_cast<Eigen::Index>(effect_ids.size()) != random_estimates.size())
      throw std::invalid_argument("ModelFit: effect id count mismatch");
  }
};

}  // namespace gpred
