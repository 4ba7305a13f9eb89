#include "kroncov/structured.hpp"

#include <cmath>
#include <limits>

#include "kroncov/errors.hpp"

namespace kroncov {

CirculantExtension embed_toeplitz(const ToeplitzFactor& t, int l) {
  const int q = t.dim();
  if (q < 1) throw input_error("embed_toeplitz: empty Toeplitz factor");
  if (l < 2 * q - 1)
    throw input_error("embed_toeplitz: embedding order l must be >= 2q-1");
  Eigen::VectorXd col = Eigen::VectorXd::Zero(l);
  for (int m = 0; m < q; ++m) {
    col(m) = t.first_row(m);
    if (m > 0) col(l - m) = t.first_row(m);
  }
  return CirculantExtension(std::move(col));
}

CirculantExtension circulant_mle(const Eigen::MatrixXd& s) {
  const int l = static_cast<int>(s.rows());
  if (l < 1 || s.cols() != l)
    throw input_error("circulant_mle: scatter matrix must be square");
  const double scale = s.cwiseAbs().maxCoeff();
  if ((s - s.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, scale))
    throw input_error("circulant_mle: scatter matrix must be symmetric");
  // Average S over each circulant diagonal set; every set has l entries.
  Eigen::VectorXd col = Eigen::VectorXd::Zero(l);
  for (int u = 0; u < l; ++u) {
    double sum = 0.0;
    for (int i = 0; i < l; ++i) sum += s(i, (i - u + l) % l);
    col(u) = sum / l;
  }
  return CirculantExtension(std::move(col));
}

Eigen::MatrixXd persym_project(const Eigen::MatrixXd& s) {
  const int q = static_cast<int>(s.rows());
  if (s.cols() != q) throw input_error("persym_project: matrix must be square");
  Eigen::MatrixXd out(q, q);
  // (J S^T J)(i,j) = S(q-1-j, q-1-i): reflection across the anti-diagonal.
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      out(i, j) = 0.5 * (s(i, j) + s(q - 1 - j, q - 1 - i));
  return out;
}

Eigen::VectorXd subdiag_sums(const Eigen::MatrixXd& a) {
  const int q = static_cast<int>(a.rows());
  if (a.cols() != q) throw input_error("subdiag_sums: matrix must be square");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i + j < q; ++i) g(j) += a(i, i + j);
  return g;
}

PdCheck pd_check(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw input_error("pd_check: matrix must be square");
  const double scale = n > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
  if (n > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() >
                   1e-10 * std::max(1.0, scale))
    throw input_error("pd_check: matrix must be symmetric");

  // Unpivoted LDL^T; pivot d_j is the ratio of consecutive leading-minor
  // determinants. Stop at the first non-positive pivot.
  PdCheck result;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd d(n);
  double min_pivot = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (int k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k) * d(k);
    min_pivot = std::min(min_pivot, pivot);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      result.pd = false;
      result.min_pivot = pivot;
      return result;
    }
    d(j) = pivot;
    l(j, j) = 1.0;
    for (int i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k) * d(k);
      l(i, j) = v / pivot;
    }
  }
  result.pd = true;
  result.min_pivot = n > 0 ? min_pivot : 1.0;
  return result;
}

}  // namespace kroncov
