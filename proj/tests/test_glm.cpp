#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kroncov/errors.hpp"
#include "kroncov/estimator.hpp"
#include "kroncov/evaluation.hpp"
#include "kroncov/glm.hpp"
#include "kroncov/simulator.hpp"
#include "oracles.hpp"

using namespace kroncov;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Residual sum of squares of y on the column span of x, via normal equations.
double rss_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd beta =
      (x.transpose() * x).ldlt().solve(x.transpose() * y);
  return (y - x * beta).squaredNorm();
}

}  // namespace

// ---------------------------------------------------------------------------
// Epoch-variance regressor
// ---------------------------------------------------------------------------

TEST_CASE("delta_regressor: interpolation over removed epochs") {
  Eigen::VectorXd d(3);
  d << 1.0, 999.0, 4.0;  // the removed value itself must be ignored
  const RegressorSeries mid = delta_regressor(EpochFactor::diagonal(d), {1});
  CHECK(mid.values(0) == 1.0);
  CHECK(mid.values(1) == 2.5);  // mean of the two neighbors
  CHECK(mid.values(2) == 4.0);
  CHECK(mid.interpolated == std::vector<char>({0, 1, 0}));

  // No removals: an exact copy with no interpolation marks.
  const RegressorSeries plain = delta_regressor(EpochFactor::diagonal(d), {});
  CHECK(plain.values == d);
  CHECK(plain.interpolated == std::vector<char>({0, 0, 0}));

  // Boundary removals copy the single retained neighbor.
  Eigen::VectorXd e(3);
  e << 8.0, 3.0, 7.0;
  CHECK(delta_regressor(EpochFactor::diagonal(e), {0}).values(0) == 3.0);
  CHECK(delta_regressor(EpochFactor::diagonal(e), {2}).values(2) == 3.0);

  // A removed run interpolates across the whole gap.
  Eigen::VectorXd f(4);
  f << 1.0, -1.0, -1.0, 7.0;
  const RegressorSeries run = delta_regressor(EpochFactor::diagonal(f), {1, 2});
  CHECK(run.values(1) == 4.0);
  CHECK(run.values(2) == 4.0);
}

TEST_CASE("delta_regressor rejects bad inputs") {
  const EpochFactor d = EpochFactor::diagonal(Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(delta_regressor(d, {0, 1, 2}), input_error);
  CHECK_THROWS_AS(delta_regressor(d, {1, 1}), input_error);
  CHECK_THROWS_AS(delta_regressor(d, {3}), input_error);
  CHECK_THROWS_AS(delta_regressor(d, {-1}), input_error);
  CHECK_THROWS_AS(
      delta_regressor(EpochFactor::dense(Eigen::MatrixXd::Identity(3, 3)), {}),
      input_error);
}

// ---------------------------------------------------------------------------
// Band-power regressor
// ---------------------------------------------------------------------------

TEST_CASE("alpha_regressor: a pure tone carries half its squared amplitude") {
  const int q = 64, r = 5;
  TrialTensor t = TrialTensor::zeros(1, q, r, 1);
  std::vector<double> amp(r);
  for (int d = 0; d < r; ++d) {
    amp[d] = 1.0 + 0.5 * d;
    for (int j = 0; j < q; ++j)
      t.value(0, d, 0, j) = amp[d] * std::sin(2.0 * M_PI * 10.0 * j / q);
  }
  // fs = 64 puts the DFT bins on integer frequencies; [9.5, 10.5] selects
  // exactly the 10 Hz bin.
  const RegressorSeries reg = alpha_regressor(t, {0}, 9.5, 10.5, 64.0);
  for (int d = 0; d < r; ++d)
    CHECK(reg.values(d) ==
          doctest::Approx(0.5 * amp[d] * amp[d]).epsilon(1e-9));
  // Doubling the amplitude quadruples the band power.
  CHECK(reg.values(2) / reg.values(0) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("alpha_regressor: white noise spreads power evenly over bins") {
  const int q = 64, r = 800;
  TrialTensor t = TrialTensor::zeros(1, q, r, 1);
  Philox g(300);
  for (double& v : t.values) v = g.next_gaussian();
  // Band [8, 16] at fs = 64 covers bins 8..16: nine interior bins, each
  // holding 2/q of the variance on average.
  const RegressorSeries reg = alpha_regressor(t, {0}, 8.0, 16.0, 64.0);
  const double mean = reg.values.mean();
  CHECK(mean == doctest::Approx(9.0 * 2.0 / q).epsilon(0.1));

  TrialTensor zero = TrialTensor::zeros(1, q, 2, 1);
  const RegressorSeries flat = alpha_regressor(zero, {0}, 8.0, 16.0, 64.0);
  CHECK(flat.values(0) == 0.0);
  CHECK(flat.values(1) == 0.0);
}

TEST_CASE("alpha_regressor rejects bad bands and channels") {
  const TrialTensor t = TrialTensor::zeros(2, 16, 2, 1);
  CHECK_THROWS_AS(alpha_regressor(t, {}, 8.0, 16.0, 64.0), input_error);
  CHECK_THROWS_AS(alpha_regressor(t, {2}, 8.0, 16.0, 64.0), input_error);
  CHECK_THROWS_AS(alpha_regressor(t, {0}, -1.0, 16.0, 64.0), input_error);
  CHECK_THROWS_AS(alpha_regressor(t, {0}, 16.0, 8.0, 64.0), input_error);
  CHECK_THROWS_AS(alpha_regressor(t, {0}, 8.0, 40.0, 64.0), input_error);
  // Bins at this length sit on multiples of 4 Hz; (0.3, 0.4) misses them all.
  CHECK_THROWS_AS(alpha_regressor(t, {0}, 0.3, 0.4, 64.0), input_error);
}

// ---------------------------------------------------------------------------
// Temporal spectrum
// ---------------------------------------------------------------------------

TEST_CASE("spectrum_from_psi: flat for white noise, peaked for a damped tone") {
  const Spectrum flat = spectrum_from_psi(ToeplitzFactor::identity(4), 7.0);
  REQUIRE(flat.power.size() == 4);
  for (int u = 0; u < 4; ++u) {
    CHECK(flat.power(u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(flat.freq_hz(u) == doctest::Approx(u * 7.0 / 7.0));
  }

  // Damped 10 Hz cosine autocovariance: the spectrum must peak near 10 Hz.
  const int q = 128;
  const double fs = 128.0, tau = 12.0;
  Eigen::VectorXd row(q);
  for (int j = 0; j < q; ++j)
    row(j) = std::exp(-j / tau) * std::cos(2.0 * M_PI * 10.0 * j / fs);
  const ToeplitzFactor psi(row);
  const Spectrum s = spectrum_from_psi(psi, fs);
  int peak = 0;
  for (int u = 1; u < s.power.size(); ++u)
    if (s.power(u) > s.power(peak)) peak = u;
  CHECK(s.freq_hz(peak) == doctest::Approx(10.0).epsilon(0.1));

  // Scaling the factor scales the spectrum linearly.
  ToeplitzFactor scaled(3.0 * row);
  const Spectrum s3 = spectrum_from_psi(scaled, fs);
  for (int u = 0; u < s.power.size(); ++u)
    CHECK(s3.power(u) == doctest::Approx(3.0 * s.power(u)).epsilon(1e-12));

  CHECK_THROWS_AS(spectrum_from_psi(psi, 0.0), input_error);
}

// ---------------------------------------------------------------------------
// Design assembly
// ---------------------------------------------------------------------------

TEST_CASE("build_design: layout, lags, and zero padding") {
  RegressorSeries interest;
  interest.values.resize(4);
  interest.values << 3.0, 1.0, 4.0, 1.5;
  interest.interpolated.assign(4, 0);

  const Design d = build_design(interest, {0, 1}, Eigen::MatrixXd());
  REQUIRE(d.x.rows() == 4);
  REQUIRE(d.x.cols() == 3);
  CHECK(d.x.col(0) == Eigen::VectorXd::Ones(4));
  CHECK(d.x.col(1) == interest.values);
  Eigen::VectorXd lag1(4);
  lag1 << 0.0, 3.0, 1.0, 4.0;  // shifted forward, zero-padded at the start
  CHECK(d.x.col(2) == lag1);
  CHECK(d.roles == std::vector<std::string>(
                       {"intercept", "interest_lag[0]", "interest_lag[1]"}));
  CHECK(d.interest_cols == std::vector<int>({1, 2}));

  // A negative shift pads at the end instead.
  RegressorSeries longer;
  longer.values.resize(6);
  longer.values << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  longer.interpolated.assign(6, 0);
  const Design neg = build_design(longer, {-1}, Eigen::MatrixXd());
  Eigen::VectorXd lead(6);
  lead << 2.0, 3.0, 4.0, 5.0, 6.0, 0.0;
  CHECK(neg.x.col(1) == lead);

  // Confounders sit between the intercept and the interest block.
  Eigen::MatrixXd conf = Eigen::MatrixXd::Zero(6, 1);
  conf << 0.5, -0.5, 1.5, 0.25, -1.0, 2.0;
  const Design with_conf = build_design(longer, {0}, conf);
  CHECK(with_conf.x.cols() == 3);
  CHECK(with_conf.x.col(1) == conf.col(0));
  CHECK(with_conf.roles[1] == "confounder[1]");
  CHECK(with_conf.interest_cols == std::vector<int>({2}));
}

TEST_CASE("build_design rejects degenerate designs") {
  RegressorSeries interest;
  interest.values.resize(8);
  interest.values << 3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0;
  interest.interpolated.assign(8, 0);

  // A duplicated shift makes two identical interest columns.
  CHECK_THROWS_WITH_AS(build_design(interest, {1, 1}, Eigen::MatrixXd()),
                       doctest::Contains("interest_lag"), input_error);

  // A constant confounder collides with the intercept.
  CHECK_THROWS_WITH_AS(
      build_design(interest, {0}, Eigen::MatrixXd::Ones(8, 1)),
      doctest::Contains("rank deficient"), input_error);

  // Too few epochs for the column count.
  RegressorSeries tiny;
  tiny.values.resize(3);
  tiny.values << 1.0, 2.0, 3.0;
  tiny.interpolated.assign(3, 0);
  CHECK_THROWS_WITH_AS(build_design(tiny, {0, 1}, Eigen::MatrixXd()),
                       doctest::Contains("more epochs"), input_error);

  CHECK_THROWS_AS(build_design(interest, {}, Eigen::MatrixXd()), input_error);
  CHECK_THROWS_AS(build_design(interest, {0}, Eigen::MatrixXd::Ones(5, 1)),
                  input_error);
}

// ---------------------------------------------------------------------------
// Partial F-test
// ---------------------------------------------------------------------------

TEST_CASE("f_statistic: nested RSS arithmetic") {
  CHECK(f_statistic(10.0, 5.0, 2, 10) == doctest::Approx(5.0));
  CHECK(f_statistic(5.0, 5.0, 2, 10) == 0.0);
  CHECK(f_statistic(4.0, 5.0, 2, 10) == 0.0);  // clamped, never negative
  CHECK_THROWS_AS(f_statistic(10.0, 5.0, 0, 10), input_error);
  CHECK_THROWS_AS(f_statistic(10.0, 5.0, 2, 0), input_error);
  CHECK_THROWS_AS(f_statistic(10.0, 0.0, 2, 10), input_error);
}

TEST_CASE("partial_f_test: matches a dense two-regression computation") {
  Philox g(310);
  const int r = 30;
  RegressorSeries interest;
  interest.values.resize(r);
  for (int e = 0; e < r; ++e)
    interest.values(e) = std::sin(0.4 * e) + 0.3 * g.next_gaussian();
  interest.interpolated.assign(r, 0);
  const Eigen::MatrixXd conf = oracle::random_matrix(r, 2, g);
  const Design d = build_design(interest, {0, 1}, conf);

  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd y(r);
    for (int e = 0; e < r; ++e)
      y(e) = g.next_gaussian() + 0.4 * rep * interest.values(e);
    const FTestResult res = partial_f_test(y, d);
    CHECK(res.df1 == 2);
    CHECK(res.df2 == r - 5);

    Eigen::MatrixXd x0(r, 3);
    x0 << d.x.col(0), d.x.col(1), d.x.col(2);
    const double rss0 = rss_of(x0, y);
    const double rss1 = rss_of(d.x, y);
    const double f = f_statistic(rss0, rss1, res.df1, res.df2);
    CHECK(res.f == doctest::Approx(f).epsilon(1e-8));
    CHECK(res.p_value > 0.0);
    CHECK(res.p_value <= 1.0);
  }
}

TEST_CASE("partial_f_test: null p-values are uniform") {
  Philox g(311);
  const int r = 40;
  RegressorSeries interest;
  interest.values.resize(r);
  for (int e = 0; e < r; ++e) interest.values(e) = std::sin(0.3 * e) + 2.0;
  interest.interpolated.assign(r, 0);
  const Eigen::MatrixXd conf = oracle::random_matrix(r, 1, g);
  const Design d = build_design(interest, {0, 1}, conf);

  const int voxels = 1000;
  std::vector<double> p(voxels);
  double mean = 0.0;
  for (int v = 0; v < voxels; ++v) {
    Eigen::VectorXd y(r);
    for (int e = 0; e < r; ++e) y(e) = g.next_gaussian();
    p[v] = partial_f_test(y, d).p_value;
    mean += p[v];
  }
  CHECK(oracle::ks_uniform_ok(p, 0.01));
  CHECK(mean / voxels == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("partial_f_test: strong signal, perfect fit, and invariance") {
  Philox g(312);
  const int r = 24;
  RegressorSeries interest;
  interest.values.resize(r);
  for (int e = 0; e < r; ++e) interest.values(e) = std::cos(0.5 * e) + 1.5;
  interest.interpolated.assign(r, 0);
  const Eigen::MatrixXd conf = oracle::random_matrix(r, 2, g);
  const Design d = build_design(interest, {0}, conf);

  // Strong signal on the interest column.
  Eigen::VectorXd y(r);
  for (int e = 0; e < r; ++e)
    y(e) = 3.0 * interest.values(e) + 0.01 * g.next_gaussian();
  CHECK(partial_f_test(y, d).p_value < 1e-8);

  // Exact linear combination of the design: flagged, not a numeric blowup.
  Eigen::VectorXd coef(4);
  coef << 1.0, -0.5, 0.25, 2.0;
  const FTestResult perfect = partial_f_test(d.x * coef, d);
  CHECK(perfect.perfect_fit);
  CHECK(perfect.p_value == 0.0);
  CHECK(std::isinf(perfect.f));

  // All-zero response: nothing to explain.
  const FTestResult null = partial_f_test(Eigen::VectorXd::Zero(r), d);
  CHECK(null.f == 0.0);
  CHECK(null.p_value == 1.0);

  // Replacing the confounders by an invertible recombination (plus intercept
  // shifts) spans the same space, so the F statistic cannot move.
  Eigen::MatrixXd tmat(2, 2);
  tmat << 2.0, 1.0, -1.0, 0.5;
  const Eigen::MatrixXd conf2 = conf * tmat +
                                Eigen::VectorXd::Ones(r) *
                                    Eigen::RowVector2d(3.0, -7.0);
  const Design d2 = build_design(interest, {0}, conf2);
  Eigen::VectorXd yn(r);
  for (int e = 0; e < r; ++e) yn(e) = g.next_gaussian();
  const FTestResult a = partial_f_test(yn, d);
  const FTestResult b = partial_f_test(yn, d2);
  CHECK(a.f == doctest::Approx(b.f).epsilon(1e-9));
  CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-9));
}

TEST_CASE("partial_f_test rejects malformed problems") {
  Design d;
  d.x = Eigen::MatrixXd::Ones(5, 1);
  d.roles = {"intercept"};
  CHECK_THROWS_AS(partial_f_test(Eigen::VectorXd::Zero(5), d), input_error);

  d.x = Eigen::MatrixXd::Identity(4, 4);
  d.roles = {"a", "b", "c", "d"};
  d.interest_cols = {3};
  CHECK_THROWS_AS(partial_f_test(Eigen::VectorXd::Zero(4), d),
                  input_error);  // no residual degrees of freedom

  d.x = Eigen::MatrixXd::Identity(6, 3);
  d.roles = {"a", "b", "c"};
  d.interest_cols = {7};
  CHECK_THROWS_AS(partial_f_test(Eigen::VectorXd::Zero(6), d), input_error);
  d.interest_cols = {2};
  CHECK_THROWS_AS(partial_f_test(Eigen::VectorXd::Zero(5), d), input_error);
}

// ---------------------------------------------------------------------------
// Multiple-testing control
// ---------------------------------------------------------------------------

TEST_CASE("bh_fdr: step-up thresholding") {
  const std::vector<bool> got =
      bh_fdr({0.001, 0.02, 0.04, 0.9}, 0.05);
  CHECK(got == std::vector<bool>({true, true, false, false}));

  CHECK(bh_fdr({1.0, 1.0, 1.0}, 0.05) ==
        std::vector<bool>({false, false, false}));

  // Boundary is inclusive: a single p exactly at alpha is rejected.
  CHECK(bh_fdr({0.05}, 0.05) == std::vector<bool>({true}));

  CHECK_THROWS_AS(bh_fdr({0.5, -0.1}, 0.05), input_error);
  CHECK_THROWS_AS(bh_fdr({0.5, 1.1}, 0.05), input_error);
  CHECK_THROWS_AS(bh_fdr({0.5}, 0.0), input_error);
  CHECK_THROWS_AS(bh_fdr({0.5}, 1.0), input_error);
}

TEST_CASE("bh_fdr: lowering a p-value never shrinks the rejection set") {
  Philox g(320);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> p(15);
    for (double& v : p) v = g.next_uniform();
    const std::vector<bool> before = bh_fdr(p, 0.1);
    std::vector<double> lowered = p;
    const int idx = static_cast<int>(g.next_u32() % 15);
    lowered[idx] *= 0.1;
    const std::vector<bool> after = bh_fdr(lowered, 0.1);
    for (int i = 0; i < 15; ++i)
      if (before[i]) CHECK(after[i]);
  }
}

// ---------------------------------------------------------------------------
// End to end: fitted epoch scales track the generating profile
// ---------------------------------------------------------------------------

TEST_CASE("fitted epoch profile ranks like the generating profile") {
  const int p = 2, q = 16, r = 30, n = 3;
  Philox g(330);
  FactorSet truth;
  truth.gamma = oracle::random_pd(p, g);
  truth.gamma /= truth.gamma(0, 0);
  truth.psi = TemporalFactor::toeplitz(oracle::random_pd_toeplitz(q, g));
  const Eigen::VectorXd profile = oracle::smooth_diagonal(r);
  truth.delta = EpochFactor::diagonal(profile);

  const TrialTensor data = sample_dataset(truth, n, 8675309);
  const FitResult res = fit(data, AssumptionSet::from_code("UTD"));
  const RegressorSeries reg = delta_regressor(res.factors.delta, {});
  CHECK(spearman(to_std(reg.values), to_std(profile)) > 0.5);
}
