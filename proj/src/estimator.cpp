#include "kroncov/estimator.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "kroncov/errors.hpp"

namespace kroncov {

namespace {

char psi_letter(PsiAssumption a) {
  switch (a) {
    case PsiAssumption::Toeplitz: return 'T';
    case PsiAssumption::Persymmetric: return 'P';
    case PsiAssumption::Unrestricted: return 'U';
  }
  return '?';
}

char delta_letter(DeltaAssumption a) {
  switch (a) {
    case DeltaAssumption::Diagonal: return 'D';
    case DeltaAssumption::Identity: return 'I';
    case DeltaAssumption::Unrestricted: return 'U';
  }
  return '?';
}

Eigen::LLT<Eigen::MatrixXd> chol_or_throw(const Eigen::MatrixXd& m,
                                          const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw numeric_error(std::string(what) + ": Cholesky factorization failed");
  return llt;
}

// W = L_gamma^{-1} X^{(d)} L_psi^{-T}: one epoch whitened on both sides.
Eigen::MatrixXd whitened_epoch(const Eigen::Map<const Eigen::MatrixXd>& x,
                               const Eigen::LLT<Eigen::MatrixXd>& gamma_llt,
                               const Eigen::LLT<Eigen::MatrixXd>& psi_llt) {
  Eigen::MatrixXd w = gamma_llt.matrixL().solve(x);
  // Right-multiplication by L_psi^{-T} = transpose of a left solve.
  return psi_llt.matrixL().solve(w.transpose()).transpose();
}

double epoch_weight(const EpochFactor& delta, int d) {
  const double v = delta.diag(d);
  if (!(v > 0.0))
    throw numeric_error("epoch factor has a non-positive diagonal entry");
  return v;
}

}  // namespace

std::string AssumptionSet::code() const {
  return std::string("U") + psi_letter(psi) + delta_letter(delta);
}

AssumptionSet AssumptionSet::from_code(const std::string& code) {
  // Accept "UTD", "utd", and the parenthesized "(U,T,D)" style.
  std::string letters;
  for (char c : code)
    if (std::isalpha(static_cast<unsigned char>(c)))
      letters.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (letters.size() != 3 || letters[0] != 'U')
    throw input_error("unknown assumption code: " + code);
  AssumptionSet a;
  switch (letters[1]) {
    case 'T': a.psi = PsiAssumption::Toeplitz; break;
    case 'P': a.psi = PsiAssumption::Persymmetric; break;
    case 'U': a.psi = PsiAssumption::Unrestricted; break;
    default: throw input_error("unknown assumption code: " + code);
  }
  switch (letters[2]) {
    case 'D': a.delta = DeltaAssumption::Diagonal; break;
    case 'I': a.delta = DeltaAssumption::Identity; break;
    case 'U': a.delta = DeltaAssumption::Unrestricted; break;
    default: throw input_error("unknown assumption code: " + code);
  }
  // The studied sets pair the persymmetric temporal assumption only with a
  // diagonal epoch factor.
  if (a.psi == PsiAssumption::Persymmetric && a.delta != DeltaAssumption::Diagonal)
    throw input_error("unsupported assumption combination: " + code);
  return a;
}

std::vector<AssumptionSet> AssumptionSet::all_sets() {
  std::vector<AssumptionSet> sets;
  for (const char* code : {"UTD", "UPD", "UUD", "UTI", "UUI", "UTU", "UUU"})
    sets.push_back(from_code(code));
  return sets;
}

Eigen::MatrixXd update_gamma(const TrialTensor& t, const TemporalFactor& psi,
                             const EpochFactor& delta) {
  if (psi.dim() != t.q || delta.dim() != t.r)
    throw input_error("update_gamma: factor dimensions do not match the data");
  const auto psi_llt = chol_or_throw(psi.mat, "update_gamma: psi");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(t.p, t.p);

  if (delta.kind == EpochFactor::Kind::Dense) {
    const auto delta_llt = chol_or_throw(delta.mat, "update_gamma: delta");
    const Eigen::MatrixXd linv =
        Eigen::MatrixXd(delta_llt.matrixL())
            .triangularView<Eigen::Lower>()
            .solve(Eigen::MatrixXd::Identity(t.r, t.r));
    std::vector<Eigen::MatrixXd> tmp(t.r);
    for (int k = 0; k < t.n; ++k) {
      for (int d = 0; d < t.r; ++d)
        tmp[d] = psi_llt.matrixL().solve(t.epoch(k, d).transpose()).transpose();
      for (int d2 = 0; d2 < t.r; ++d2) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(t.p, t.q);
        for (int d1 = 0; d1 <= d2; ++d1) w += linv(d2, d1) * tmp[d1];
        acc.noalias() += w * w.transpose();
      }
    }
  } else {
    for (int k = 0; k < t.n; ++k)
      for (int d = 0; d < t.r; ++d) {
        const Eigen::MatrixXd w =
            psi_llt.matrixL().solve(t.epoch(k, d).transpose()).transpose();
        acc.noalias() += w * w.transpose() / epoch_weight(delta, d);
      }
  }
  acc /= static_cast<double>(t.n) * t.q * t.r;
  return 0.5 * (acc + acc.transpose());  // enforce exact symmetry
}

EpochFactor update_delta(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                         const TemporalFactor& psi, DeltaAssumption mode) {
  if (gamma.rows() != t.p || psi.dim() != t.q)
    throw input_error("update_delta: factor dimensions do not match the data");
  if (mode == DeltaAssumption::Identity) return EpochFactor::identity(t.r);
  const auto gamma_llt = chol_or_throw(gamma, "update_delta: gamma");
  const auto psi_llt = chol_or_throw(psi.mat, "update_delta: psi");
  const double denom = static_cast<double>(t.n) * t.p * t.q;

  if (mode == DeltaAssumption::Diagonal) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(t.r);
    for (int k = 0; k < t.n; ++k)
      for (int d = 0; d < t.r; ++d)
        diag(d) += whitened_epoch(t.epoch(k, d), gamma_llt, psi_llt).squaredNorm();
    return EpochFactor::diagonal(diag / denom);
  }

  // Unrestricted: Gram matrix of vectorized whitened epochs.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(t.r, t.r);
  Eigen::MatrixXd v(t.r, static_cast<Eigen::Index>(t.p) * t.q);
  for (int k = 0; k < t.n; ++k) {
    for (int d = 0; d < t.r; ++d) {
      const Eigen::MatrixXd w = whitened_epoch(t.epoch(k, d), gamma_llt, psi_llt);
      v.row(d) = Eigen::Map<const Eigen::VectorXd>(
          w.data(), static_cast<Eigen::Index>(t.p) * t.q);
    }
    acc.noalias() += v * v.transpose();
  }
  acc /= denom;
  return EpochFactor::dense(0.5 * (acc + acc.transpose()));
}

Eigen::MatrixXd temporal_scatter(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                                 const EpochFactor& delta) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(t.q, t.q);
  for (int k = 0; k < t.n; ++k) {
    const Eigen::MatrixXd ytilde = whiten_y(unfold(t, k, UnfoldKind::Y).mat, gamma, delta);
    s.noalias() += ytilde * ytilde.transpose();
  }
  s /= static_cast<double>(t.n) * t.p * t.r;
  return 0.5 * (s + s.transpose());
}

PsiUpdate update_psi(const TrialTensor& t, const Eigen::MatrixXd& gamma,
                     const EpochFactor& delta, PsiAssumption mode,
                     const FitConfig& cfg, const CirculantExtension* warm_start) {
  if (gamma.rows() != t.p || delta.dim() != t.r)
    throw input_error("update_psi: factor dimensions do not match the data");
  const Eigen::MatrixXd s = temporal_scatter(t, gamma, delta);
  PsiUpdate out;

  if (mode == PsiAssumption::Unrestricted) {
    out.psi = TemporalFactor::dense(s);
    return out;
  }
  if (mode == PsiAssumption::Persymmetric) {
    out.psi = TemporalFactor::dense(persym_project(s));
    return out;
  }

  // Toeplitz: EM over symmetric circulants of order l. The observed block
  // is the q leading coordinates; the l-q trailing ones are treated as
  // missing. Only the observed scatter enters the E-step, so the cost per
  // iteration is independent of the sample count.
  const int q = t.q;
  const int l = cfg.embedding_l > 0 ? cfg.embedding_l : 2 * q - 1;
  if (l < 2 * q - 1)
    throw input_error("update_psi: embedding order must be at least 2q-1");

  CirculantExtension c = CirculantExtension::identity(l);
  bool restarted = false;
  if (warm_start != nullptr) {
    if (warm_start->size() == l && warm_start->is_symmetric(1e-9) &&
        warm_start->positive_definite()) {
      c = *warm_start;
    }
  }

  Eigen::MatrixXd s_full(l, l);
  for (int it = 0; it < cfg.em_max_iters; ++it) {
    if (l == q) {
      // Fully observed circulant (only possible for q = 1).
      s_full = s;
    } else {
      // Partition the precision matrix of the current circulant.
      const Eigen::VectorXd theta_col = c.inverse_first_col();
      const Eigen::MatrixXd theta = CirculantExtension(theta_col).dense();
      const Eigen::MatrixXd pblock = theta.bottomLeftCorner(l - q, q);
      const Eigen::MatrixXd uinv = theta.bottomRightCorner(l - q, l - q);
      const Eigen::MatrixXd u = chol_or_throw(uinv, "update_psi: EM conditional")
                                    .solve(Eigen::MatrixXd::Identity(l - q, l - q));
      // E[missing | observed] = -U P x, with conditional covariance U.
      const Eigen::MatrixXd b = u * pblock;  // (l-q) x q
      const Eigen::MatrixXd sb = s * b.transpose();
      s_full.topLeftCorner(q, q) = s;
      s_full.topRightCorner(q, l - q) = -sb;
      s_full.bottomLeftCorner(l - q, q) = -sb.transpose();
      s_full.bottomRightCorner(l - q, l - q) = b * sb + u;
      s_full.bottomRightCorner(l - q, l - q) =
          0.5 * (s_full.bottomRightCorner(l - q, l - q) +
                 s_full.bottomRightCorner(l - q, l - q).transpose().eval());
    }

    CirculantExtension next = circulant_mle(s_full);
    if (!next.positive_definite()) {
      if (!restarted && it == 0 && warm_start != nullptr) {
        // A stale warm start can be numerically unusable; retry cold.
        c = CirculantExtension::identity(l);
        restarted = true;
        continue;
      }
      throw numeric_error(
          "update_psi: EM produced a non-positive-definite circulant "
          "(temporal scatter may be rank deficient)");
    }

    // Observed-data log-likelihood per vector under the Toeplitz block;
    // EM guarantees this trace is nondecreasing.
    const Eigen::MatrixXd psi_dense = next.toeplitz_block(q).dense();
    const auto psi_llt = chol_or_throw(psi_dense, "update_psi: psi block");
    double logdet = 0.0;
    for (int i = 0; i < q; ++i)
      logdet += 2.0 * std::log(psi_llt.matrixL()(i, i));
    const double trace_term = psi_llt.solve(s).trace();
    out.em_objective.push_back(
        -0.5 * (q * std::log(2.0 * M_PI) + logdet + trace_term));

    const double change = (next.first_col.head(q) - c.first_col.head(q)).norm();
    const double scale = std::max(c.first_col.head(q).norm(), 1e-300);
    c = next;
    ++out.em_iters;
    if (change <= cfg.em_tol * scale) break;
  }

  out.psi = TemporalFactor::toeplitz(c.first_col.head(q).eval());
  out.extension = std::move(c);
  return out;
}

double log_likelihood(const TrialTensor& t, const FactorSet& fs) {
  if (fs.p() != t.p || fs.q() != t.q || fs.r() != t.r)
    throw input_error("log_likelihood: factor dimensions do not match the data");
  const auto gamma_llt = chol_or_throw(fs.gamma, "log_likelihood: gamma");
  const auto psi_llt = chol_or_throw(fs.psi.mat, "log_likelihood: psi");

  double logdet_gamma = 0.0;
  for (int i = 0; i < t.p; ++i)
    logdet_gamma += 2.0 * std::log(gamma_llt.matrixL()(i, i));
  double logdet_psi = 0.0;
  for (int j = 0; j < t.q; ++j)
    logdet_psi += 2.0 * std::log(psi_llt.matrixL()(j, j));

  double logdet_delta = 0.0;
  Eigen::MatrixXd delta_linv;
  if (fs.delta.kind == EpochFactor::Kind::Dense) {
    const auto delta_llt = chol_or_throw(fs.delta.mat, "log_likelihood: delta");
    for (int d = 0; d < t.r; ++d)
      logdet_delta += 2.0 * std::log(delta_llt.matrixL()(d, d));
    delta_linv = Eigen::MatrixXd(delta_llt.matrixL())
                     .triangularView<Eigen::Lower>()
                     .solve(Eigen::MatrixXd::Identity(t.r, t.r));
  } else {
    for (int d = 0; d < t.r; ++d) logdet_delta += std::log(epoch_weight(fs.delta, d));
  }

  // Quadratic form via doubly whitened epochs.
  double quad = 0.0;
  Eigen::MatrixXd v(t.r, static_cast<Eigen::Index>(t.p) * t.q);
  for (int k = 0; k < t.n; ++k) {
    if (fs.delta.kind == EpochFactor::Kind::Dense) {
      for (int d = 0; d < t.r; ++d) {
        const Eigen::MatrixXd w = whitened_epoch(t.epoch(k, d), gamma_llt, psi_llt);
        v.row(d) = Eigen::Map<const Eigen::VectorXd>(
            w.data(), static_cast<Eigen::Index>(t.p) * t.q);
      }
      quad += (delta_linv * v).squaredNorm();
    } else {
      for (int d = 0; d < t.r; ++d)
        quad += whitened_epoch(t.epoch(k, d), gamma_llt, psi_llt).squaredNorm() /
                epoch_weight(fs.delta, d);
    }
  }

  const double npqr = static_cast<double>(t.n) * t.p * t.q * t.r;
  return -0.5 * (npqr * std::log(2.0 * M_PI) +
                 t.n * (static_cast<double>(t.p) * t.q * logdet_delta +
                        static_cast<double>(t.p) * t.r * logdet_psi +
                        static_cast<double>(t.q) * t.r * logdet_gamma) +
                 quad);
}

FactorSet normalize(const FactorSet& fs) {
  const double g11 = fs.gamma(0, 0);
  const double d11 = fs.delta.first();
  if (!(g11 > 0.0) || !(d11 > 0.0))
    throw numeric_error("normalize: leading entries must be positive");
  FactorSet out = fs;
  out.gamma /= g11;
  const double scale = g11 * d11;
  out.psi.mat *= scale;
  if (out.psi.kind == TemporalFactor::Kind::Toeplitz) out.psi.first_row *= scale;
  switch (fs.delta.kind) {
    case EpochFactor::Kind::Identity:
      break;  // d11 == 1 by construction
    case EpochFactor::Kind::Diagonal:
      out.delta.diag /= d11;
      break;
    case EpochFactor::Kind::Dense:
      out.delta.mat /= d11;
      break;
  }
  return out;
}

double gamma_residual(const TrialTensor& t, const FactorSet& fs) {
  const Eigen::MatrixXd rhs = update_gamma(t, fs.psi, fs.delta);
  return (fs.gamma - rhs).norm() / std::max(fs.gamma.norm(), 1e-300);
}

double delta_residual(const TrialTensor& t, const FactorSet& fs,
                      DeltaAssumption mode) {
  const EpochFactor rhs = update_delta(t, fs.gamma, fs.psi, mode);
  const Eigen::MatrixXd cur = fs.delta.dense();
  const Eigen::MatrixXd upd = rhs.dense();
  return (cur - upd).norm() / std::max(cur.norm(), 1e-300);
}

Eigen::VectorXd g_residual_vector(const TrialTensor& t, const FactorSet& fs) {
  const Eigen::MatrixXd s = temporal_scatter(t, fs.gamma, fs.delta);
  const auto psi_llt = chol_or_throw(fs.psi.mat, "g_residual: psi");
  const Eigen::MatrixXd inner =
      psi_llt.solve(psi_llt.solve(s).transpose()).transpose() -
      psi_llt.solve(Eigen::MatrixXd::Identity(t.q, t.q));
  const double ntilde = static_cast<double>(t.n) * t.p * t.r;
  return subdiag_sums(ntilde * inner);
}

bool assumptions_admissible(int p, int q, int r, int n, const AssumptionSet& a) {
  if (p < 1 || q < 1 || r < 1 || n < 1) return false;
  const long long nqr = static_cast<long long>(n) * q * r;
  const long long npr = static_cast<long long>(n) * p * r;
  const long long npq = static_cast<long long>(n) * p * q;
  if (nqr < p) return false;  // unrestricted spatial factor
  switch (a.psi) {
    case PsiAssumption::Toeplitz:
    case PsiAssumption::Persymmetric:
      if (npr < (q + 1) / 2) return false;
      break;
    case PsiAssumption::Unrestricted:
      // Unrestricted temporal factors fall back to the general flip-flop
      // condition, which also bounds the epoch dimension.
      if (npr < q || npq < r) return false;
      break;
  }
  if (a.delta == DeltaAssumption::Unrestricted && npq < r) return false;
  return true;
}

FitResult fit(const TrialTensor& t, const AssumptionSet& assumptions,
              const FitConfig& cfg) {
  t.validate();
  if (cfg.max_outer_iters < 1 || cfg.em_max_iters < 1)
    throw input_error("fit: iteration limits must be positive");
  if (!(cfg.outer_tol > 0.0) || !(cfg.em_tol > 0.0))
    throw input_error("fit: tolerances must be positive");
  if (!assumptions_admissible(t.p, t.q, t.r, t.n, assumptions)) {
    std::ostringstream msg;
    msg << "fit: sample size inadmissible for " << assumptions.code()
        << " at p=" << t.p << " q=" << t.q << " r=" << t.r << " n=" << t.n;
    throw input_error(msg.str());
  }

  FactorSet fs = FactorSet::identity(t.p, t.q, t.r);
  if (assumptions.delta == DeltaAssumption::Diagonal)
    fs.delta = EpochFactor::diagonal(Eigen::VectorXd::Ones(t.r));
  else if (assumptions.delta == DeltaAssumption::Unrestricted)
    fs.delta = EpochFactor::dense(Eigen::MatrixXd::Identity(t.r, t.r));

  FitResult result;
  std::optional<CirculantExtension> extension;
  double prev_ll = std::numeric_limits<double>::quiet_NaN();

  for (int m = 1; m <= cfg.max_outer_iters; ++m) {
    const FactorSet prev = fs;
    try {
      PsiUpdate pu = update_psi(t, fs.gamma, fs.delta, assumptions.psi, cfg,
                                extension ? &*extension : nullptr);
      fs.psi = std::move(pu.psi);
      extension = std::move(pu.extension);
      result.em_iters_total += pu.em_iters;

      if (assumptions.psi != PsiAssumption::Toeplitz) {
        const PdCheck pc = pd_check(fs.psi.mat);
        if (!pc.pd) {
          std::ostringstream msg;
          msg << "temporal update not positive definite (pivot " << pc.min_pivot
              << ")";
          throw numeric_error(msg.str());
        }
      }

      if (assumptions.delta != DeltaAssumption::Identity) {
        fs.delta = update_delta(t, fs.gamma, fs.psi, assumptions.delta);
        if (fs.delta.kind == EpochFactor::Kind::Diagonal) {
          if (!(fs.delta.diag.minCoeff() > 0.0))
            throw numeric_error("epoch update has a non-positive entry");
        } else {
          const PdCheck pc = pd_check(fs.delta.mat);
          if (!pc.pd) {
            std::ostringstream msg;
            msg << "epoch update not positive definite (pivot " << pc.min_pivot
                << ")";
            throw numeric_error(msg.str());
          }
        }
      }

      fs.gamma = update_gamma(t, fs.psi, fs.delta);
      const PdCheck pc = pd_check(fs.gamma);
      if (!pc.pd) {
        std::ostringstream msg;
        msg << "spatial update not positive definite (pivot " << pc.min_pivot
            << ")";
        throw numeric_error(msg.str());
      }

      const double scale = fs.gamma(0, 0) * fs.delta.first();
      fs = normalize(fs);
      // Keep the warm start consistent with the rescaled psi.
      if (extension) extension->first_col *= scale;

      const double ll = log_likelihood(t, fs);
      if (!std::isfinite(ll)) throw numeric_error("log-likelihood not finite");
      result.loglik_trace.push_back(ll);
      result.outer_iters = m;

      if (m >= 2) {
        const double rel_change =
            std::abs(ll - prev_ll) / std::max(std::abs(prev_ll), 1e-300);
        bool stop = rel_change <= cfg.outer_tol;
        if (stop && cfg.factor_tol > 0.0) {
          const double gchange =
              (fs.gamma - prev.gamma).norm() / std::max(prev.gamma.norm(), 1e-300);
          const double pchange = (fs.psi.mat - prev.psi.mat).norm() /
                                 std::max(prev.psi.mat.norm(), 1e-300);
          const double dchange = (fs.delta.dense() - prev.delta.dense()).norm() /
                                 std::max(prev.delta.dense().norm(), 1e-300);
          stop = std::max({gchange, pchange, dchange}) <= cfg.factor_tol;
        }
        if (stop) {
          result.converged = true;
          prev_ll = ll;
          break;
        }
      }
      prev_ll = ll;
    } catch (const numeric_error& e) {
      std::ostringstream msg;
      msg << "fit(" << assumptions.code() << ") outer iteration " << m << ": "
          << e.what();
      throw numeric_error(msg.str());
    }
  }

  result.factors = fs;
  if (assumptions.psi == PsiAssumption::Toeplitz)
    result.g_residual = g_residual_vector(t, fs).cwiseAbs().maxCoeff();
  return result;
}

}  // namespace kroncov
