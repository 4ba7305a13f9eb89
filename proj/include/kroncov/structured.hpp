#pragma once

#include <Eigen/Dense>

#include "kroncov/factors.hpp"

namespace kroncov {

// Embeds a q x q symmetric Toeplitz matrix into a symmetric circulant of
// order l >= 2q-1: c_m = t_m for m < q, c_m = c_{l-m} for m > l-q, zeros
// in between. The leading q x q block of the result is the input.
CirculantExtension embed_toeplitz(const ToeplitzFactor& t, int l);

// Maximum-likelihood symmetric circulant given a scatter matrix S (the
// average of x x^T over the samples): c_u is the mean of S over the
// diagonal set {(i,j) : (i-j) mod l == u}. For PD input the result is PD
// and is the exact maximizer over symmetric circulants.
CirculantExtension circulant_mle(const Eigen::MatrixXd& s);

// Orthogonal projection onto persymmetric matrices: (S + J S^T J) / 2
// with J the exchange (anti-identity) matrix. For symmetric S this is
// the symmetric-persymmetric average (S + J S J) / 2.
Eigen::MatrixXd persym_project(const Eigen::MatrixXd& s);

// Sums along superdiagonals: g(j) = sum_{i=0}^{q-1-j} A(i, i+j) for
// j = 0..q-1. This is the gradient contraction that appears in the
// Toeplitz stationarity condition.
Eigen::VectorXd subdiag_sums(const Eigen::MatrixXd& a);

struct PdCheck {
  bool pd = false;
  // Smallest pivot seen in the (unpivoted) LDL^T sweep. For a PD matrix
  // all pivots are positive; the sweep stops at the first non-positive
  // pivot, so on failure this bounds the most negative leading-minor
  // pivot from below.
  double min_pivot = 0.0;
};

// Positive-definiteness via Cholesky pivots. Throws input_error if the
// matrix is not (numerically) symmetric.
PdCheck pd_check(const Eigen::MatrixXd& m);

}  // namespace kroncov
