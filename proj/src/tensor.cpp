#include "kroncov/tensor.hpp"

#include <cmath>

#include "kroncov/errors.hpp"

namespace kroncov {

TrialTensor TrialTensor::zeros(int p, int q, int r, int n) {
  if (p < 1 || q < 1 || r < 1 || n < 1)
    throw input_error("TrialTensor: all dimensions must be positive");
  TrialTensor t;
  t.p = p;
  t.q = q;
  t.r = r;
  t.n = n;
  t.values.assign(static_cast<std::size_t>(p) * q * r * n, 0.0);
  return t;
}

Eigen::Map<const Eigen::MatrixXd> TrialTensor::epoch(int k, int d) const {
  return {values.data() + flat(k, d, 0, 0), p, q};
}

Eigen::Map<const Eigen::MatrixXd> TrialTensor::sample(int k) const {
  return {values.data() + flat(k, 0, 0, 0), p,
          static_cast<Eigen::Index>(q) * r};
}

void TrialTensor::validate() const {
  if (p < 1 || q < 1 || r < 1 || n < 1)
    throw input_error("TrialTensor: all dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(p) * q * r * n)
    throw input_error("TrialTensor: storage size does not match dimensions");
  for (double v : values)
    if (!std::isfinite(v))
      throw input_error("TrialTensor: values must be finite");
}

Unfolding unfold(const TrialTensor& t, int k, UnfoldKind kind) {
  if (k < 0 || k >= t.n) throw input_error("unfold: sample index out of range");
  Unfolding u;
  u.kind = kind;
  switch (kind) {
    case UnfoldKind::X:
      u.mat = t.sample(k);
      break;
    case UnfoldKind::Y:
      u.mat.resize(t.q, static_cast<Eigen::Index>(t.p) * t.r);
      for (int d = 0; d < t.r; ++d)
        u.mat.middleCols(static_cast<Eigen::Index>(d) * t.p, t.p) =
            t.epoch(k, d).transpose();
      break;
    case UnfoldKind::Z:
      u.mat.resize(t.r, static_cast<Eigen::Index>(t.p) * t.q);
      for (int d = 0; d < t.r; ++d) {
        const auto block = t.epoch(k, d);  // p x q, column-major = vec order
        u.mat.row(d) = Eigen::Map<const Eigen::VectorXd>(
            block.data(), static_cast<Eigen::Index>(t.p) * t.q);
      }
      break;
  }
  return u;
}

void refold(TrialTensor& t, int k, const Unfolding& u) {
  if (k < 0 || k >= t.n) throw input_error("refold: sample index out of range");
  const Eigen::Index cols_expected =
      u.kind == UnfoldKind::X   ? static_cast<Eigen::Index>(t.q) * t.r
      : u.kind == UnfoldKind::Y ? static_cast<Eigen::Index>(t.p) * t.r
                                : static_cast<Eigen::Index>(t.p) * t.q;
  const Eigen::Index rows_expected =
      u.kind == UnfoldKind::X ? t.p : u.kind == UnfoldKind::Y ? t.q : t.r;
  if (u.mat.rows() != rows_expected || u.mat.cols() != cols_expected)
    throw input_error("refold: matrix shape does not match tensor dimensions");
  for (int d = 0; d < t.r; ++d)
    for (int j = 0; j < t.q; ++j)
      for (int i = 0; i < t.p; ++i) {
        double v = 0.0;
        switch (u.kind) {
          case UnfoldKind::X: v = u.mat(i, static_cast<Eigen::Index>(t.q) * d + j); break;
          case UnfoldKind::Y: v = u.mat(j, static_cast<Eigen::Index>(t.p) * d + i); break;
          case UnfoldKind::Z: v = u.mat(d, static_cast<Eigen::Index>(t.p) * j + i); break;
        }
        t.value(k, d, i, j) = v;
      }
}

TrialTensor restrict_epochs(const TrialTensor& t, const std::vector<int>& epochs) {
  if (epochs.empty()) throw input_error("restrict_epochs: empty epoch subset");
  for (std::size_t a = 0; a < epochs.size(); ++a) {
    if (epochs[a] < 0 || epochs[a] >= t.r)
      throw input_error("restrict_epochs: epoch index out of range");
    if (a > 0 && epochs[a] <= epochs[a - 1])
      throw input_error("restrict_epochs: epoch indices must be strictly ascending");
  }
  TrialTensor out = TrialTensor::zeros(t.p, t.q, static_cast<int>(epochs.size()), t.n);
  for (int k = 0; k < t.n; ++k)
    for (std::size_t d = 0; d < epochs.size(); ++d)
      for (int j = 0; j < t.q; ++j)
        for (int i = 0; i < t.p; ++i)
          out.value(k, static_cast<int>(d), i, j) = t.value(k, epochs[d], i, j);
  return out;
}

bool sample_size_admissible(int p, int q, int r, int n) {
  if (p < 1 || q < 1 || r < 1 || n < 1) return false;
  // n >= p/(qr)  and  n >= ceil(q/2)/(pr), kept in integers.
  const long long nqr = static_cast<long long>(n) * q * r;
  const long long npr = static_cast<long long>(n) * p * r;
  return nqr >= p && npr >= (q + 1) / 2;
}

double sample_size_requirement(int p, int q, int r) {
  const double gamma_need = static_cast<double>(p) / (static_cast<double>(q) * r);
  const double psi_need =
      static_cast<double>((q + 1) / 2) / (static_cast<double>(p) * r);
  return std::max(gamma_need, psi_need);
}

double kron_frobenius_inner(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& b1,
                            const Eigen::MatrixXd& c1, const Eigen::MatrixXd& a2,
                            const Eigen::MatrixXd& b2, const Eigen::MatrixXd& c2) {
  if (a1.rows() != a2.rows() || a1.cols() != a2.cols() ||
      b1.rows() != b2.rows() || b1.cols() != b2.cols() ||
      c1.rows() != c2.rows() || c1.cols() != c2.cols())
    throw input_error("kron_frobenius_inner: factor shapes must match pairwise");
  return a1.cwiseProduct(a2).sum() * b1.cwiseProduct(b2).sum() *
         c1.cwiseProduct(c2).sum();
}

Eigen::MatrixXd whiten_y(const Eigen::MatrixXd& y, const Eigen::MatrixXd& gamma,
                         const EpochFactor& delta) {
  const int p = static_cast<int>(gamma.rows());
  if (gamma.cols() != p) throw input_error("whiten_y: gamma must be square");
  if (p < 1 || y.cols() % p != 0)
    throw input_error("whiten_y: column count must be a multiple of p");
  const int r = static_cast<int>(y.cols()) / p;
  if (delta.dim() != r)
    throw input_error("whiten_y: delta dimension does not match epoch count");

  Eigen::LLT<Eigen::MatrixXd> llt(gamma);
  if (llt.info() != Eigen::Success)
    throw numeric_error("whiten_y: gamma is not positive definite");

  // Per-epoch right-multiplication by L_gamma^{-T}: Y^{(d)} L^{-T} is the
  // transpose of L^{-1} Y^{(d)T}.
  const int q = static_cast<int>(y.rows());
  Eigen::MatrixXd spatial(q, y.cols());
  for (int d = 0; d < r; ++d) {
    spatial.middleCols(static_cast<Eigen::Index>(d) * p, p) =
        llt.matrixL()
            .solve(y.middleCols(static_cast<Eigen::Index>(d) * p, p).transpose())
            .transpose();
  }

  switch (delta.kind) {
    case EpochFactor::Kind::Identity:
      return spatial;
    case EpochFactor::Kind::Diagonal: {
      for (int d = 0; d < r; ++d) {
        if (!(delta.diag(d) > 0.0))
          throw numeric_error("whiten_y: delta has a non-positive epoch scale");
        spatial.middleCols(static_cast<Eigen::Index>(d) * p, p) /=
            std::sqrt(delta.diag(d));
      }
      return spatial;
    }
    case EpochFactor::Kind::Dense: {
      Eigen::LLT<Eigen::MatrixXd> dllt(delta.mat);
      if (dllt.info() != Eigen::Success)
        throw numeric_error("whiten_y: delta is not positive definite");
      // Mix epochs with L_delta^{-1}: out^{(d2)} = sum_{d1<=d2} Linv(d2,d1) in^{(d1)}.
      Eigen::MatrixXd linv = Eigen::MatrixXd(dllt.matrixL())
                                 .triangularView<Eigen::Lower>()
                                 .solve(Eigen::MatrixXd::Identity(r, r));
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(q, y.cols());
      for (int d2 = 0; d2 < r; ++d2)
        for (int d1 = 0; d1 <= d2; ++d1)
          out.middleCols(static_cast<Eigen::Index>(d2) * p, p) +=
              linv(d2, d1) * spatial.middleCols(static_cast<Eigen::Index>(d1) * p, p);
      return out;
    }
  }
  throw input_error("whiten_y: unknown epoch factor kind");
}

}  // namespace kroncov
