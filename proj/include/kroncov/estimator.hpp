#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "kroncov/factors.hpp"
#include "kroncov/structured.hpp"
#include "kroncov/tensor.hpp"

namespace kroncov {

// The spatial factor is always unrestricted; the temporal and epoch factors
// each carry one of the structural assumptions below. Codes follow the
// (spatial, temporal, epoch) order, e.g. "UTD" = unrestricted gamma,
// Toeplitz psi, diagonal delta.
enum class PsiAssumption { Toeplitz, Persymmetric, Unrestricted };
enum class DeltaAssumption { Diagonal, Identity, Unrestricted };

struct AssumptionSet {
  PsiAssumption psi = PsiAssumption::Toeplitz;
  DeltaAssumption delta = DeltaAssumption::Diagonal;

  std::string code() const;  // e.g. "UTD"
  static AssumptionSet from_code(const std::string& code);
  // The seven sets in fixed study order:
  // UTD, UPD, UUD, UTI, UUI, UTU, UUU.
  static std::vector<AssumptionSet> all_sets();
};

struct FitConfig {
  int max_outer_iters = 200;
  double outer_tol = 1e-7;  // relative log-likelihood change
  int em_max_iters = 100;
  double em_tol = 1e-6;  // relative change of the Toeplitz first row
  // Circulant embedding order; 0 means the minimal 2q-1.
  int embedding_l = 0;
  // Optional extra stop rule: when positive, outer iterations continue
  // until the largest relative factor change also drops below this.
  // Off by default, so the stock stopping rule is purely likelihood-based.
  double factor_tol = 0.0;
};

struct FitResult {
  FactorSet factors;                  // normalized
  std::vector<double> loglik_trace;   // one entry per outer iteration
  int outer_iters = 0;
  long em_iters_total = 0;
  bool converged = false;
  // Max |subdiagonal-sum| of the Toeplitz stationarity residual at the
  // returned estimate; NaN for non-Toeplitz temporal assumptions.
  double g_residual = std::numeric_limits<double>::quiet_NaN();
};

// --- Single conditional-maximization steps --------------------------------

// gamma <- (1/(nqr)) sum_k X_k (delta (x) psi)^{-1} X_k^T, evaluated via
// Cholesky transports of psi and delta. Exact conditional maximizer.
Eigen::MatrixXd update_gamma(const TrialTensor& t, const TemporalFactor& psi,
                             const EpochFactor& delta);

// delta <- (1/(npq)) Gram matrix of the spatially/temporally whitened
// epochs; Diagonal mode keeps only the diagonal (the exact conditional
// maximizer over diagonal matrices), Dense keeps the full matrix.
EpochFactor update_delta(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                         const TemporalFactor& psi, DeltaAssumption mode);

struct PsiUpdate {
  TemporalFactor psi;
  // Fitted circulant (order l) whose leading block is psi; only under the
  // Toeplitz assumption. Kept across outer iterations as the EM warm start.
  std::optional<CirculantExtension> extension;
  int em_iters = 0;
  std::vector<double> em_objective;  // per-sample expected log-likelihood
};

// Temporal update given the whitened scatter S = (1/(npr)) sum Ytilde Ytilde^T.
//   Unrestricted:  psi <- S
//   Persymmetric:  psi <- (S + J S J)/2
//   Toeplitz:      EM over symmetric circulants of order l >= 2q-1 that
//                  treats the l-q trailing circulant coordinates as missing
//                  data; each M-step is a circulant MLE, and the fixed
//                  point satisfies the Toeplitz stationarity condition.
PsiUpdate update_psi(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                     const EpochFactor& delta, PsiAssumption mode,
                     const FitConfig& cfg,
                     const CirculantExtension* warm_start = nullptr);

// --- Whole-model quantities ------------------------------------------------

// Exact Gaussian log-likelihood of the data under the factor set, using
// log|delta (x) psi (x) gamma| = pq log|delta| + pr log|psi| + qr log|gamma|.
double log_likelihood(const TrialTensor& t, const FactorSet& fs);

// Rescales so gamma(0,0) = delta(0,0) = 1, moving the scale into psi.
// The Kronecker product of the three factors is unchanged.
FactorSet normalize(const FactorSet& fs);

// Whitened temporal scatter S = (1/(npr)) sum_k Ytilde_k Ytilde_k^T.
Eigen::MatrixXd temporal_scatter(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                                 const EpochFactor& delta);

// Diagnostics: relative self-consistency residuals of the three likelihood
// equations at a given factor set.
double gamma_residual(const TrialTensor& t, const FactorSet& fs);
double delta_residual(const TrialTensor& t, const FactorSet& fs, DeltaAssumption mode);
// Subdiagonal sums of npr*(psi^{-1} S psi^{-1} - psi^{-1}); max-abs entry
// is the g_residual reported by fit().
Eigen::VectorXd g_residual_vector(const TrialTensor& t, const FactorSet& fs);

// Sample-size admissibility specialized to the assumption set: each factor
// contributes its own existence bound (identity/diagonal epochs need none).
bool assumptions_admissible(int p, int q, int r, int n, const AssumptionSet& a);

// Flip-flop maximum-likelihood fit. Starts at identity factors, cycles
// psi -> delta -> gamma, renormalizes, and stops when the relative
// log-likelihood gain falls below cfg.outer_tol (and, if set, the factor
// change falls below cfg.factor_tol). Throws input_error for inadmissible
// inputs and numeric_error if an update loses positive definiteness.
FitResult fit(const TrialTensor& t, const AssumptionSet& assumptions,
              const FitConfig& cfg = {});

}  // namespace kroncov
