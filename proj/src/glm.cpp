#include "kroncov/glm.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kroncov/errors.hpp"
#include "kroncov/structured.hpp"

namespace kroncov {

RegressorSeries delta_regressor(const EpochFactor& delta_hat,
                                const std::vector<int>& removed) {
  if (delta_hat.kind == EpochFactor::Kind::Dense)
    throw input_error("delta_regressor: epoch factor must be diagonal");
  const int r = delta_hat.dim();
  std::vector<char> is_removed(r, 0);
  for (int d : removed) {
    if (d < 0 || d >= r)
      throw input_error("delta_regressor: removed epoch index out of range");
    if (is_removed[d])
      throw input_error("delta_regressor: duplicate removed epoch index");
    is_removed[d] = 1;
  }
  if (static_cast<int>(removed.size()) >= r)
    throw input_error("delta_regressor: all epochs removed");

  RegressorSeries out;
  out.values = delta_hat.diag;
  out.interpolated.assign(r, 0);
  for (int d = 0; d < r; ++d) {
    if (!is_removed[d]) continue;
    int left = d - 1;
    while (left >= 0 && is_removed[left]) --left;
    int right = d + 1;
    while (right < r && is_removed[right]) ++right;
    if (left >= 0 && right < r)
      out.values(d) = 0.5 * (delta_hat.diag(left) + delta_hat.diag(right));
    else if (left >= 0)
      out.values(d) = delta_hat.diag(left);
    else
      out.values(d) = delta_hat.diag(right);
    out.interpolated[d] = 1;
  }
  return out;
}

RegressorSeries alpha_regressor(const TrialTensor& t,
                                const std::vector<int>& channels, double f_lo,
                                double f_hi, double fs) {
  t.validate();
  if (channels.empty()) throw input_error("alpha_regressor: no channels selected");
  for (int c : channels)
    if (c < 0 || c >= t.p)
      throw input_error("alpha_regressor: channel index out of range");
  if (!(fs > 0.0)) throw input_error("alpha_regressor: sampling rate must be positive");
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0))
    throw input_error("alpha_regressor: band must satisfy 0 < f_lo < f_hi < fs/2");

  // DFT bins of the q-point epoch series that fall inside the band.
  std::vector<int> bins;
  for (int u = 1; u <= t.q / 2; ++u) {
    const double f = u * fs / t.q;
    if (f >= f_lo && f <= f_hi) bins.push_back(u);
  }
  if (bins.empty())
    throw input_error("alpha_regressor: band contains no DFT bins at this length");

  RegressorSeries out;
  out.values = Eigen::VectorXd::Zero(t.r);
  out.interpolated.assign(t.r, 0);
  for (int d = 0; d < t.r; ++d) {
    double acc = 0.0;
    for (int k = 0; k < t.n; ++k)
      for (int c : channels) {
        for (int u : bins) {
          double re = 0.0, im = 0.0;
          for (int j = 0; j < t.q; ++j) {
            const double angle = 2.0 * M_PI * u * j / t.q;
            const double v = t.value(k, d, c, j);
            re += v * std::cos(angle);
            im -= v * std::sin(angle);
          }
          // One-sided weights: conjugate bins folded in, Nyquist unpaired.
          const double w = (t.q % 2 == 0 && u == t.q / 2) ? 1.0 : 2.0;
          acc += w * (re * re + im * im) / (static_cast<double>(t.q) * t.q);
        }
      }
    out.values(d) = acc / (static_cast<double>(t.n) * channels.size());
  }
  return out;
}

Spectrum spectrum_from_psi(const ToeplitzFactor& psi, double fs) {
  if (!(fs > 0.0)) throw input_error("spectrum_from_psi: sampling rate must be positive");
  const int q = psi.dim();
  if (q < 1) throw input_error("spectrum_from_psi: empty factor");
  const int l = 2 * q - 1;
  const Eigen::VectorXd lambda = embed_toeplitz(psi, l).eigenvalues();
  Spectrum s;
  s.freq_hz.resize(q);
  s.power.resize(q);
  for (int u = 0; u < q; ++u) {  // one-sided grid: u = 0 .. (l-1)/2
    s.freq_hz(u) = u * fs / l;
    s.power(u) = std::max(lambda(u), 0.0);
  }
  return s;
}

Design build_design(const RegressorSeries& interest, const std::vector<int>& shifts,
                    const Eigen::MatrixXd& confounders) {
  const int r = static_cast<int>(interest.values.size());
  if (r < 1) throw input_error("build_design: empty interest regressor");
  if (shifts.empty()) throw input_error("build_design: no shifts given");
  if (confounders.rows() != 0 && confounders.rows() != r)
    throw input_error("build_design: confounder rows must match epoch count");
  const int m = confounders.rows() == 0 ? 0 : static_cast<int>(confounders.cols());
  const int cols = 1 + m + static_cast<int>(shifts.size());
  if (r <= cols)
    throw input_error("build_design: need more epochs than design columns");

  Design d;
  d.x.resize(r, cols);
  d.x.col(0).setOnes();
  d.roles.push_back("intercept");
  for (int j = 0; j < m; ++j) {
    d.x.col(1 + j) = confounders.col(j);
    d.roles.push_back("confounder[" + std::to_string(j + 1) + "]");
  }
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    const int col = 1 + m + static_cast<int>(s);
    for (int e = 0; e < r; ++e) {
      const int src = e - shifts[s];
      d.x(e, col) = (src >= 0 && src < r) ? interest.values(src) : 0.0;
    }
    d.roles.push_back("interest_lag[" + std::to_string(shifts[s]) + "]");
    d.interest_cols.push_back(col);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    // Columns pivoted beyond the numerical rank are the dependent ones.
    std::ostringstream msg;
    msg << "build_design: design matrix is rank deficient; dependent columns:";
    const auto& perm = qr.colsPermutation().indices();
    for (int i = qr.rank(); i < cols; ++i) msg << " " << d.roles[perm(i)];
    throw input_error(msg.str());
  }
  return d;
}

double f_statistic(double rss0, double rss1, int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw input_error("f_statistic: degrees of freedom must be positive");
  if (!(rss1 > 0.0)) throw input_error("f_statistic: residual sum of squares must be positive");
  return std::max(rss0 - rss1, 0.0) / d1 / (rss1 / d2);
}

FTestResult partial_f_test(const Eigen::VectorXd& y, const Design& design) {
  const int r = static_cast<int>(design.x.rows());
  const int cols = static_cast<int>(design.x.cols());
  if (static_cast<int>(y.size()) != r)
    throw input_error("partial_f_test: response length must match design rows");
  if (design.interest_cols.empty())
    throw input_error("partial_f_test: design has no interest columns");

  FTestResult res;
  res.df1 = static_cast<int>(design.interest_cols.size());
  res.df2 = r - cols;
  if (res.df2 < 1)
    throw input_error("partial_f_test: no residual degrees of freedom");

  // Reorder so the interest block is last; one QR then yields both nested
  // residuals, which keeps RSS0 >= RSS1 exact.
  std::vector<char> is_interest(cols, 0);
  for (int c : design.interest_cols) {
    if (c < 0 || c >= cols)
      throw input_error("partial_f_test: interest column index out of range");
    is_interest[c] = 1;
  }
  Eigen::MatrixXd xperm(r, cols);
  int at = 0;
  for (int c = 0; c < cols; ++c)
    if (!is_interest[c]) xperm.col(at++) = design.x.col(c);
  for (int c = 0; c < cols; ++c)
    if (is_interest[c]) xperm.col(at++) = design.x.col(c);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xperm);
  const Eigen::MatrixXd rmat = qr.matrixQR().topRows(cols);
  for (int c = 0; c < cols; ++c)
    if (std::abs(rmat(c, c)) <= 1e-12 * std::abs(rmat(0, 0)))
      throw input_error("partial_f_test: design matrix is rank deficient");
  Eigen::VectorXd qty = qr.householderQ().transpose() * y;

  double rss1 = 0.0;
  for (int i = cols; i < r; ++i) rss1 += qty(i) * qty(i);
  double interest_ss = 0.0;
  for (int i = cols - res.df1; i < cols; ++i) interest_ss += qty(i) * qty(i);
  const double rss0 = rss1 + interest_ss;

  const double ynorm2 = y.squaredNorm();
  if (ynorm2 == 0.0) {
    res.f = 0.0;
    res.p_value = 1.0;
    return res;
  }
  if (rss1 <= 1e-24 * ynorm2) {
    res.f = std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
    res.perfect_fit = true;
    return res;
  }
  res.f = f_statistic(rss0, rss1, res.df1, res.df2);
  const boost::math::fisher_f_distribution<double> dist(res.df1, res.df2);
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.f));
  return res;
}

std::vector<bool> bh_fdr(const std::vector<double>& p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw input_error("bh_fdr: alpha must be in (0, 1)");
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw input_error("bh_fdr: p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  double threshold = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (p_values[order[k - 1]] <= static_cast<double>(k) * alpha / m) {
      threshold = p_values[order[k - 1]];
      break;
    }
  }
  std::vector<bool> reject(m, false);
  if (threshold >= 0.0)
    for (std::size_t i = 0; i < m; ++i) reject[i] = p_values[i] <= threshold;
  return reject;
}

}  // namespace kroncov
