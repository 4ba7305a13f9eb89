#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace kroncov {

// Symmetric Toeplitz matrix stored as its first row (lags 0..q-1).
struct ToeplitzFactor {
  Eigen::VectorXd first_row;

  ToeplitzFactor() = default;
  explicit ToeplitzFactor(Eigen::VectorXd row) : first_row(std::move(row)) {}

  int dim() const { return static_cast<int>(first_row.size()); }
  Eigen::MatrixXd dense() const;
  static ToeplitzFactor identity(int q);
};

// Symmetric circulant matrix of order l, stored as its first column.
// Symmetry means c_m == c_{l-m}; eigenvalues are the real DFT of the
// first column, so positive definiteness is a strict-positivity check
// on that spectrum.
struct CirculantExtension {
  Eigen::VectorXd first_col;

  CirculantExtension() = default;
  explicit CirculantExtension(Eigen::VectorXd col) : first_col(std::move(col)) {}

  int size() const { return static_cast<int>(first_col.size()); }
  bool is_symmetric(double tol = 1e-12) const;
  Eigen::VectorXd eigenvalues() const;
  double min_eigenvalue() const;
  bool positive_definite() const { return min_eigenvalue() > 0.0; }
  // First column of the inverse, computed in the eigenbasis. Requires PD.
  Eigen::VectorXd inverse_first_col() const;
  Eigen::MatrixXd dense() const;
  // Leading q x q block, which is Toeplitz with first row c_0..c_{q-1}.
  ToeplitzFactor toeplitz_block(int q) const;
  static CirculantExtension identity(int l);
};

// Epoch covariance. Identity and Diagonal carry their scales in diag;
// Dense carries a full symmetric matrix (used by the unrestricted fits).
struct EpochFactor {
  enum class Kind { Identity, Diagonal, Dense };

  Kind kind = Kind::Identity;
  Eigen::VectorXd diag;  // valid for Identity (all ones) and Diagonal
  Eigen::MatrixXd mat;   // valid for Dense

  int dim() const;
  double first() const;  // the (1,1) entry
  Eigen::MatrixXd dense() const;
  // Principal submatrix on the given (ascending, 0-based) epoch indices.
  EpochFactor restricted(const std::vector<int>& epochs) const;

  static EpochFactor identity(int r);
  static EpochFactor diagonal(Eigen::VectorXd d);
  static EpochFactor dense(Eigen::MatrixXd m);
};

// Temporal covariance: either Toeplitz (fitted under the Toeplitz
// assumption) or a general symmetric matrix. mat is always populated.
struct TemporalFactor {
  enum class Kind { Toeplitz, Dense };

  Kind kind = Kind::Dense;
  Eigen::VectorXd first_row;  // valid for Toeplitz
  Eigen::MatrixXd mat;

  int dim() const { return static_cast<int>(mat.rows()); }

  static TemporalFactor toeplitz(Eigen::VectorXd row);
  static TemporalFactor toeplitz(const ToeplitzFactor& t) {
    return toeplitz(t.first_row);
  }
  static TemporalFactor dense(Eigen::MatrixXd m);
  static TemporalFactor identity(int q);
};

// The three-factor covariance model: epoch (x) temporal (x) spatial,
// i.e. vec(X_k) has covariance kron(delta, kron(psi, gamma)).
struct FactorSet {
  Eigen::MatrixXd gamma;  // spatial, p x p, symmetric PD
  TemporalFactor psi;     // temporal, q x q
  EpochFactor delta;      // epoch, r x r

  int p() const { return static_cast<int>(gamma.rows()); }
  int q() const { return psi.dim(); }
  int r() const { return delta.dim(); }

  static FactorSet identity(int p, int q, int r);
};

}  // namespace kroncov
