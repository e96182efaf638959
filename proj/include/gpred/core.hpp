#pragma once

// Relationship-matrix construction and small closed-form genetic-architecture
// formulas. Everything here is a pure function of its inputs.

#include "gpred/types.hpp"

namespace gpred {

// Column allele frequencies p_i = (sum of codes) / (2 * non-missing count).
Vector allele_frequencies(const GenotypeMatrix& W);

// Codes with missing entries replaced by their column mean 2*p_i.
Matrix impute_missing(const GenotypeMatrix& W);

// Genomic relationship matrix. Raw mode returns W W'; centered mode subtracts
// 2*p_i from column i and divides the product by sum 2*p_i*(1-p_i).
// Missing entries are mean-imputed first.
RelationshipMatrix genomic_relationship(const GenotypeMatrix& W, bool centered = true);

// Numerator relationship matrix A (twice the kinship matrix) by the tabular
// recursion. Requires a topologically ordered pedigree.
RelationshipMatrix pedigree_numerator_matrix(const Pedigree& ped);

// sigma_b2 * sum 2*p_i*(1-p_i).
double expected_genetic_variance(const Vector& freqs, double sigma_b2);

// Effective number of independently segregating chromosome segments, 4*Ne*L.
double effective_qtl_count(double Ne, double L_morgans);

// Verifies symmetry and positive semidefiniteness by Cholesky, allowing
// additive jitter up to max_rel_jitter * trace/n. Returns the jitter that was
// needed (0 for a cleanly PSD matrix); throws if the matrix is asymmetric or
// not PSD within tolerance.
double check_symmetric_psd(const Matrix& K, double max_rel_jitter = 1e-8);

}  // namespace gpred
