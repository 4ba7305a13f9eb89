#include "kroncov/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kroncov/errors.hpp"
#include "kroncov/rng.hpp"
#include "kroncov/tensor.hpp"

namespace kroncov {

namespace {

void check_same_dims(const FactorSet& a, const FactorSet& b, const char* what) {
  if (a.p() != b.p() || a.q() != b.q() || a.r() != b.r())
    throw input_error(std::string(what) + ": factor dimensions must match");
}

// ||A (x) B (x) C - A' (x) B' (x) C'||_F^2 expanded into three factor-wise
// inner products.
double kron_sq_distance(const FactorSet& x, const FactorSet& y) {
  const Eigen::MatrixXd xd = x.delta.dense();
  const Eigen::MatrixXd yd = y.delta.dense();
  const double xx =
      kron_frobenius_inner(x.gamma, x.psi.mat, xd, x.gamma, x.psi.mat, xd);
  const double xy =
      kron_frobenius_inner(x.gamma, x.psi.mat, xd, y.gamma, y.psi.mat, yd);
  const double yy =
      kron_frobenius_inner(y.gamma, y.psi.mat, yd, y.gamma, y.psi.mat, yd);
  return xx - 2.0 * xy + yy;
}

double kron_sq_norm(const FactorSet& x) {
  const Eigen::MatrixXd xd = x.delta.dense();
  return kron_frobenius_inner(x.gamma, x.psi.mat, xd, x.gamma, x.psi.mat, xd);
}

std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // average of 1-based positions
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double mse_total(const FactorSet& est, const FactorSet& truth) {
  check_same_dims(est, truth, "mse_total");
  const double denom = kron_sq_norm(truth);
  if (!(denom > 0.0)) throw input_error("mse_total: truth has zero norm");
  return kron_sq_distance(est, truth) / denom;
}

ComponentMse mse_components(const FactorSet& est, const FactorSet& truth) {
  check_same_dims(est, truth, "mse_components");
  const double tol = 1e-8;
  if (std::abs(est.gamma(0, 0) - 1.0) > tol ||
      std::abs(truth.gamma(0, 0) - 1.0) > tol ||
      std::abs(est.delta.first() - 1.0) > tol ||
      std::abs(truth.delta.first() - 1.0) > tol)
    throw input_error("mse_components: both factor sets must be normalized");
  ComponentMse out;
  out.gamma = (est.gamma - truth.gamma).squaredNorm() / truth.gamma.squaredNorm();
  out.psi = (est.psi.mat - truth.psi.mat).squaredNorm() / truth.psi.mat.squaredNorm();
  const Eigen::MatrixXd ed = est.delta.dense();
  const Eigen::MatrixXd td = truth.delta.dense();
  out.delta = (ed - td).squaredNorm() / td.squaredNorm();
  return out;
}

std::vector<std::vector<int>> split_epochs(int r, SplitMode mode, int folds,
                                           int repeats, std::uint64_t seed) {
  if (r < 1) throw input_error("split_epochs: epoch count must be positive");
  if (folds < 1 || folds > r)
    throw input_error("split_epochs: folds must be between 1 and r");
  if (repeats < 1) throw input_error("split_epochs: repeats must be positive");
  if (mode == SplitMode::Consecutive) repeats = 1;

  std::vector<std::vector<int>> subsets;
  for (int rep = 0; rep < repeats; ++rep) {
    std::vector<int> epochs(r);
    std::iota(epochs.begin(), epochs.end(), 0);
    if (mode == SplitMode::Random) {
      Philox rng(seed, static_cast<std::uint64_t>(rep));
      // Fisher-Yates with rejection sampling for unbiased bounded draws.
      for (int i = r - 1; i > 0; --i) {
        const std::uint32_t bound = static_cast<std::uint32_t>(i) + 1;
        const std::uint32_t limit = 0xFFFFFFFFu - 0xFFFFFFFFu % bound;
        std::uint32_t draw;
        do {
          draw = rng.next_u32();
        } while (draw >= limit);
        std::swap(epochs[i], epochs[draw % bound]);
      }
    }
    int offset = 0;
    for (int f = 0; f < folds; ++f) {
      const int size = r / folds + (f < r % folds ? 1 : 0);
      std::vector<int> subset(epochs.begin() + offset,
                              epochs.begin() + offset + size);
      std::sort(subset.begin(), subset.end());
      subsets.push_back(std::move(subset));
      offset += size;
    }
  }
  return subsets;
}

double validation_measure(const FactorSet& sub_fit, const FactorSet& full_fit,
                          const std::vector<int>& subset) {
  if (sub_fit.p() != full_fit.p() || sub_fit.q() != full_fit.q())
    throw input_error("validation_measure: spatial/temporal dimensions must match");
  if (sub_fit.r() != static_cast<int>(subset.size()))
    throw input_error("validation_measure: sub-fit epoch count must match subset");
  FactorSet induced;
  induced.gamma = full_fit.gamma;
  induced.psi = full_fit.psi;
  induced.delta = full_fit.delta.restricted(subset);
  const double denom = kron_sq_norm(induced);
  if (!(denom > 0.0))
    throw input_error("validation_measure: induced covariance has zero norm");
  return kron_sq_distance(sub_fit, induced) / denom;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw input_error("spearman: series lengths must match");
  if (a.size() < 2) throw input_error("spearman: need at least two points");
  const std::vector<double> ra = midranks(a);
  const std::vector<double> rb = midranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = ra[i] - mean;
    const double dy = rb[i] - mean;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw input_error("spearman: a constant series has no rank correlation");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace kroncov
