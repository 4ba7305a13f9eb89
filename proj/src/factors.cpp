#include "kroncov/factors.hpp"

#include <cmath>

#include "kroncov/errors.hpp"

namespace kroncov {

Eigen::MatrixXd ToeplitzFactor::dense() const {
  const int q = dim();
  Eigen::MatrixXd m(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) m(i, j) = first_row(std::abs(i - j));
  return m;
}

ToeplitzFactor ToeplitzFactor::identity(int q) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(q);
  row(0) = 1.0;
  return ToeplitzFactor(row);
}

bool CirculantExtension::is_symmetric(double tol) const {
  const int l = size();
  for (int m = 1; m < l; ++m)
    if (std::abs(first_col(m) - first_col(l - m)) > tol) return false;
  return true;
}

Eigen::VectorXd CirculantExtension::eigenvalues() const {
  // Real DFT; for a symmetric first column the imaginary parts cancel.
  const int l = size();
  Eigen::VectorXd lambda(l);
  for (int j = 0; j < l; ++j) {
    double sum = 0.0;
    for (int m = 0; m < l; ++m)
      sum += first_col(m) * std::cos(2.0 * M_PI * j * m / l);
    lambda(j) = sum;
  }
  return lambda;
}

double CirculantExtension::min_eigenvalue() const {
  return eigenvalues().minCoeff();
}

Eigen::VectorXd CirculantExtension::inverse_first_col() const {
  const int l = size();
  const Eigen::VectorXd lambda = eigenvalues();
  if (lambda.minCoeff() <= 0.0)
    throw numeric_error("circulant inverse: matrix is not positive definite");
  Eigen::VectorXd inv(l);
  for (int m = 0; m < l; ++m) {
    double sum = 0.0;
    for (int j = 0; j < l; ++j)
      sum += std::cos(2.0 * M_PI * j * m / l) / lambda(j);
    inv(m) = sum / l;
  }
  return inv;
}

Eigen::MatrixXd CirculantExtension::dense() const {
  const int l = size();
  Eigen::MatrixXd m(l, l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) m(i, j) = first_col(((i - j) % l + l) % l);
  return m;
}

ToeplitzFactor CirculantExtension::toeplitz_block(int q) const {
  if (q < 1 || q > size())
    throw input_error("toeplitz_block: block size out of range");
  return ToeplitzFactor(first_col.head(q));
}

CirculantExtension CirculantExtension::identity(int l) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(l);
  col(0) = 1.0;
  return CirculantExtension(col);
}

int EpochFactor::dim() const {
  return kind == Kind::Dense ? static_cast<int>(mat.rows())
                             : static_cast<int>(diag.size());
}

double EpochFactor::first() const {
  return kind == Kind::Dense ? mat(0, 0) : diag(0);
}

Eigen::MatrixXd EpochFactor::dense() const {
  if (kind == Kind::Dense) return mat;
  return diag.asDiagonal();
}

EpochFactor EpochFactor::restricted(const std::vector<int>& epochs) const {
  const int r = dim();
  if (epochs.empty()) throw input_error("restricted: empty epoch subset");
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i] < 0 || epochs[i] >= r)
      throw input_error("restricted: epoch index out of range");
    if (i > 0 && epochs[i] <= epochs[i - 1])
      throw input_error("restricted: epoch indices must be strictly ascending");
  }
  const int m = static_cast<int>(epochs.size());
  if (kind == Kind::Dense) {
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) sub(a, b) = mat(epochs[a], epochs[b]);
    return dense(std::move(sub));
  }
  Eigen::VectorXd sub(m);
  for (int a = 0; a < m; ++a) sub(a) = diag(epochs[a]);
  return kind == Kind::Identity ? identity(m) : diagonal(std::move(sub));
}

EpochFactor EpochFactor::identity(int r) {
  EpochFactor f;
  f.kind = Kind::Identity;
  f.diag = Eigen::VectorXd::Ones(r);
  return f;
}

EpochFactor EpochFactor::diagonal(Eigen::VectorXd d) {
  EpochFactor f;
  f.kind = Kind::Diagonal;
  f.diag = std::move(d);
  return f;
}

EpochFactor EpochFactor::dense(Eigen::MatrixXd m) {
  EpochFactor f;
  f.kind = Kind::Dense;
  f.mat = std::move(m);
  return f;
}

TemporalFactor TemporalFactor::toeplitz(Eigen::VectorXd row) {
  TemporalFactor f;
  f.kind = Kind::Toeplitz;
  f.first_row = std::move(row);
  f.mat = ToeplitzFactor(f.first_row).dense();
  return f;
}

TemporalFactor TemporalFactor::dense(Eigen::MatrixXd m) {
  TemporalFactor f;
  f.kind = Kind::Dense;
  f.mat = std::move(m);
  return f;
}

TemporalFactor TemporalFactor::identity(int q) {
  return toeplitz(ToeplitzFactor::identity(q).first_row);
}

FactorSet FactorSet::identity(int p, int q, int r) {
  FactorSet fs;
  fs.gamma = Eigen::MatrixXd::Identity(p, p);
  fs.psi = TemporalFactor::identity(q);
  fs.delta = EpochFactor::identity(r);
  return fs;
}

}  // namespace kroncov
