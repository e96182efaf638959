#include "gpred/core.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <unordered_map>

namespace gpred {

Vector allele_frequencies(const GenotypeMatrix& W) {
  W.validate();
  const Eigen::Index n = W.n(), p = W.p();
  Vector freqs(p);
  const bool masked = W.missing.size() > 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Eigen::Index observed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (masked && W.missing(i, j)) continue;
      sum += W.codes(i, j);
      ++observed;
    }
    if (observed == 0) {
      const std::string name = W.marker_ids.empty() ? std::to_string(j) : W.marker_ids[j];
      throw std::invalid_argument("allele_frequencies: column " + name + " is entirely missing");
    }
    freqs[j] = sum / (2.0 * static_cast<double>(observed));
  }
  return freqs;
}

Matrix impute_missing(const GenotypeMatrix& W) {
  Matrix codes = W.codes;
  if (!W.has_missing()) return codes;
  const Vector freqs = allele_frequencies(W);
  for (Eigen::Index j = 0; j < codes.cols(); ++j)
    for (Eigen::Index i = 0; i < codes.rows(); ++i)
      if (W.missing(i, j)) codes(i, j) = 2.0 * freqs[j];
  return codes;
}

RelationshipMatrix genomic_relationship(const GenotypeMatrix& W, bool centered) {
  const Matrix codes = impute_missing(W);
  RelationshipMatrix rel;
  rel.ids = W.individual_ids;
  if (!centered) {
    rel.kind = RelationshipKind::GenomicRaw;
    rel.K.noalias() = codes * codes.transpose();
    return rel;
  }
  const Vector freqs = allele_frequencies(W);
  const double denom = expected_genetic_variance(freqs, 1.0);
  if (denom <= 0.0)
    throw std::invalid_argument(
        "genomic_relationship: all markers are monomorphic, centered scaling undefined");
  const Matrix centered_codes = codes.rowwise() - 2.0 * freqs.transpose();
  rel.kind = RelationshipKind::GenomicCentered;
  rel.K.noalias() = centered_codes * centered_codes.transpose() / denom;
  return rel;
}

RelationshipMatrix pedigree_numerator_matrix(const Pedigree& ped) {
  const Eigen::Index n = static_cast<Eigen::Index>(ped.records.size());
  std::unordered_map<std::string, Eigen::Index> index;
  index.reserve(ped.records.size());

  // Resolve parents to indices; a parent must already be listed, so a cycle
  // or a forward reference shows up as an unresolved name.
  std::vector<Eigen::Index> sire(n, -1), dam(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = ped.records[i];
    if (index.count(rec.id))
      throw std::invalid_argument("pedigree: duplicate individual '" + rec.id + "'");
    auto lookup = [&](const std::string& parent) -> Eigen::Index {
      if (!Pedigree::known(parent)) return -1;
      if (parent == rec.id)
        throw std::invalid_argument("pedigree: '" + rec.id + "' is its own parent");
      auto it = index.find(parent);
      if (it == index.end())
        throw std::invalid_argument("pedigree: parent '" + parent + "' of '" + rec.id +
                                    "' not listed earlier (cycle or forward reference)");
      return it->second;
    };
    sire[i] = lookup(rec.sire);
    dam[i] = lookup(rec.dam);
    index.emplace(rec.id, i);
  }

  // Tabular method: A(i,i) = 1 + A(s,d)/2, A(i,j) = (A(j,s) + A(j,d))/2.
  Matrix A = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index s = sire[i], d = dam[i];
    for (Eigen::Index j = 0; j < i; ++j) {
      double a = 0.0;
      if (s >= 0) a += 0.5 * A(j, s);
      if (d >= 0) a += 0.5 * A(j, d);
      A(i, j) = A(j, i) = a;
    }
    A(i, i) = 1.0 + (s >= 0 && d >= 0 ? 0.5 * A(s, d) : 0.0);
  }

  RelationshipMatrix rel;
  rel.kind = RelationshipKind::PedigreeA;
  rel.K = std::move(A);
  rel.ids.reserve(ped.records.size());
  for (const auto& rec : ped.records) rel.ids.push_back(rec.id);
  return rel;
}

double expected_genetic_variance(const Vector& freqs, double sigma_b2) {
  if (!(sigma_b2 >= 0.0))
    throw std::invalid_argument("expected_genetic_variance: sigma_b2 must be >= 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < freqs.size(); ++i) {
    const double p = freqs[i];
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("expected_genetic_variance: frequency outside [0,1]");
    sum += 2.0 * p * (1.0 - p);
  }
  return sigma_b2 * sum;
}

double effective_qtl_count(double Ne, double L_morgans) {
  if (!(Ne > 0.0) || !(L_morgans > 0.0))
    throw std::invalid_argument("effective_qtl_count: Ne and L must be > 0");
  return 4.0 * Ne * L_morgans;
}

double check_symmetric_psd(const Matrix& K, double max_rel_jitter) {
  if (K.rows() != K.cols()) throw std::invalid_argument("check_symmetric_psd: matrix not square");
  const double scale = K.cwiseAbs().maxCoeff();
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw std::invalid_argument("check_symmetric_psd: matrix not symmetric");
  const double max_jitter =
      max_rel_jitter * std::max(K.trace() / static_cast<double>(K.rows()), 1e-300);
  for (double jitter : {0.0, 0.01 * max_jitter, 0.1 * max_jitter, max_jitter}) {
    Matrix trial = K;
    if (jitter > 0.0) trial.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(trial);
    if (llt.info() == Eigen::Success) return jitter;
  }
  throw std::invalid_argument("check_symmetric_psd: matrix not positive semidefinite within jitter tolerance");
}

}  // namespace gpred
