#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kroncov/factors.hpp"
#include "kroncov/tensor.hpp"

namespace kroncov {

// A per-epoch scalar series used as a GLM regressor. interpolated marks
// epochs whose value was filled in rather than estimated.
struct RegressorSeries {
  Eigen::VectorXd values;
  std::vector<char> interpolated;
};

// Turns a fitted diagonal epoch factor into a regressor. Epochs listed in
// `removed` (0-based) get the mean of the nearest retained neighbor on
// each side; at the boundary the single neighbor is copied.
RegressorSeries delta_regressor(const EpochFactor& delta_hat,
                                const std::vector<int>& removed);

// Mean band power per epoch: for each selected channel and sample, the
// DFT power of the q-point epoch series summed over bins inside
// [f_lo, f_hi], normalized so a unit-variance white series has total
// power (over all bins) equal to its variance. Averaged over channels
// and samples; one value per epoch.
RegressorSeries alpha_regressor(const TrialTensor& t,
                                const std::vector<int>& channels, double f_lo,
                                double f_hi, double fs);

struct Spectrum {
  Eigen::VectorXd freq_hz;
  Eigen::VectorXd power;
};

// One-sided power spectrum implied by a Toeplitz temporal factor: the
// eigenvalue spectrum of its minimal circulant embedding (order 2q-1) on
// the frequency grid u*fs/(2q-1), clipped at zero.
Spectrum spectrum_from_psi(const ToeplitzFactor& psi, double fs);

struct Design {
  Eigen::MatrixXd x;                // r rows: [intercept | confounders | interest shifts]
  std::vector<std::string> roles;   // one label per column
  std::vector<int> interest_cols;   // column indices of the shifted interest
};

// Assembles the design matrix: intercept, confounder columns, then one
// copy of the interest regressor per shift (epoch lags, zero-padded).
// Throws if the result is rank deficient, naming the dependent columns.
Design build_design(const RegressorSeries& interest, const std::vector<int>& shifts,
                    const Eigen::MatrixXd& confounders);

struct FTestResult {
  double f = 0.0;
  int df1 = 0;
  int df2 = 0;
  double p_value = 1.0;
  bool perfect_fit = false;
};

// F statistic from nested residual sums of squares.
double f_statistic(double rss0, double rss1, int d1, int d2);

// Partial F-test for the joint contribution of the interest columns on
// top of intercept + confounders. Uses one QR with the interest columns
// ordered last, so the nested residuals are exactly monotone.
FTestResult partial_f_test(const Eigen::VectorXd& y, const Design& design);

// Benjamini-Hochberg step-up at level alpha; true = rejected.
std::vector<bool> bh_fdr(const std::vector<double>& p_values, double alpha);

}  // namespace kroncov
