#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kroncov/factors.hpp"

namespace kroncov {

// A space x time x epoch x sample data block. values holds
// x_k^{(d)}(i, j) at flat index i + p*(j + q*(d + r*k)), i.e. channel
// fastest, then time, then epoch, then sample — which makes sample(k)
// exactly the channels x (time*epoch) unfolding when read column-major.
struct TrialTensor {
  int p = 0;  // channels
  int q = 0;  // time samples per epoch
  int r = 0;  // epochs
  int n = 0;  // independent samples (trials)
  std::vector<double> values;

  static TrialTensor zeros(int p, int q, int r, int n);

  std::size_t flat(int k, int d, int i, int j) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(p) *
               (j + static_cast<std::size_t>(q) * (d + static_cast<std::size_t>(r) * k));
  }
  double value(int k, int d, int i, int j) const { return values[flat(k, d, i, j)]; }
  double& value(int k, int d, int i, int j) { return values[flat(k, d, i, j)]; }

  // p x q view of epoch d of sample k.
  Eigen::Map<const Eigen::MatrixXd> epoch(int k, int d) const;
  // p x (q*r) view of sample k; epoch blocks are laid out side by side.
  Eigen::Map<const Eigen::MatrixXd> sample(int k) const;

  // Checks dimensions, storage size, and that every value is finite.
  void validate() const;
};

enum class UnfoldKind {
  X,  // channels x (time*epoch):  X(i, q*d + j)
  Y,  // time x (channels*epoch):  Y(j, p*d + i)
  Z,  // epochs x (channels*time): Z(d, p*j + i)
};

struct Unfolding {
  UnfoldKind kind = UnfoldKind::X;
  Eigen::MatrixXd mat;
};

// Matricizes sample k along the requested mode.
Unfolding unfold(const TrialTensor& t, int k, UnfoldKind kind);

// Writes an unfolding back into sample k; exact inverse of unfold.
void refold(TrialTensor& t, int k, const Unfolding& u);

// Keeps only the listed epochs (ascending, 0-based), reindexing them.
TrialTensor restrict_epochs(const TrialTensor& t, const std::vector<int>& epochs);

// Existence condition for the structured MLE: n >= max(p/(qr), ceil(q/2)/(pr)).
// Uses exact integer arithmetic.
bool sample_size_admissible(int p, int q, int r, int n);
// The same bound as a real number, for diagnostics.
double sample_size_requirement(int p, int q, int r);

// <A1 (x) B1 (x) C1, A2 (x) B2 (x) C2>_F = <A1,A2> <B1,B2> <C1,C2>,
// evaluated without forming any Kronecker product.
double kron_frobenius_inner(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& b1,
                            const Eigen::MatrixXd& c1, const Eigen::MatrixXd& a2,
                            const Eigen::MatrixXd& b2, const Eigen::MatrixXd& c2);

// Whitens a time x (channels*epoch) unfolding on the right by the inverse
// Cholesky transports of gamma and delta, so that if the columns of Y come
// from the three-factor model the whitened columns are iid N(0, psi).
Eigen::MatrixXd whiten_y(const Eigen::MatrixXd& y, const Eigen::MatrixXd& gamma,
                         const EpochFactor& delta);

}  // namespace kroncov
