#pragma once

#include <cstdint>
#include <vector>

#include "kroncov/factors.hpp"

namespace kroncov {

// Relative squared error of the assembled covariance,
//   ||est - truth||_F^2 / ||truth||_F^2,
// evaluated factor-wise so no Kronecker product is ever formed. Invariant
// under compensating rescalings of the factors.
double mse_total(const FactorSet& est, const FactorSet& truth);

struct ComponentMse {
  double gamma = 0.0;
  double psi = 0.0;
  double delta = 0.0;
};

// Per-factor relative squared errors. Both factor sets must be normalized
// (gamma(0,0) = delta(0,0) = 1), otherwise the split is not identifiable.
ComponentMse mse_components(const FactorSet& est, const FactorSet& truth);

enum class SplitMode { Consecutive, Random };

// Partitions epochs 0..r-1 into `folds` subsets of near-equal size (the
// first r mod folds subsets get the extra epoch). Consecutive mode returns
// contiguous runs once; Random mode reshuffles per repeat, giving
// repeats*folds subsets. Indices within a subset are ascending.
std::vector<std::vector<int>> split_epochs(int r, SplitMode mode, int folds = 4,
                                           int repeats = 1, std::uint64_t seed = 0);

// Held-out structural agreement: relative squared distance between the
// covariance refit on an epoch subset and the full fit restricted to that
// subset (psi and gamma from the full fit, delta restricted to the subset).
double validation_measure(const FactorSet& sub_fit, const FactorSet& full_fit,
                          const std::vector<int>& subset);

// Spearman rank correlation with mid-ranks for ties. Throws for length
// mismatch, fewer than two points, or a constant series.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace kroncov
