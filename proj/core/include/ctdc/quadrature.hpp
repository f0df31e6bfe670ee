#pragma once

#include <vector>

#include "ctdc/process_model.hpp"

namespace ctdc {

// Covariance of (theta, tau).
struct TraitCovariance {
  double s11 = 1.0;
  double s12 = 0.0;
  double s22 = 1.0;

  double correlation() const;
  bool is_psd(double tol = 1e-12) const;

  friend bool operator==(const TraitCovariance&, const TraitCovariance&) = default;
};

// Lower-triangular L with L L^T = Sigma.
struct CholeskyFactor {
  double l11 = 1.0;
  double l21 = 0.0;
  double l22 = 1.0;

  TraitCovariance covariance() const { return {l11 * l11, l11 * l21, l21 * l21 + l22 * l22}; }
  TraitPair apply(double z1, double z2) const { return {l11 * z1, l21 * z1 + l22 * z2}; }
};

// Cholesky factor that tolerates singular PSD matrices (zero columns where
// the variance vanishes). Throws Error(usage) if Sigma is not PSD.
CholeskyFactor psd_cholesky(const TraitCovariance& sigma);

// Gauss-Hermite rule for the standard normal: sum w_i g(z_i) ~ E g(Z).
// Nodes ascending and exactly symmetric, weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

GaussHermiteRule gauss_hermite_normal(int n);

// Tensor-product rule mapped through the Cholesky factor of Sigma, so the
// weighted sum over nodes approximates an expectation under N(0, Sigma).
// Node q = r * points_per_dim + s corresponds to (z_r, z_s).
class QuadratureGrid {
 public:
  static QuadratureGrid adapted(const TraitCovariance& sigma, int points_per_dim);

  int points_per_dim() const noexcept { return static_cast<int>(rule_.size()); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<TraitPair>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const GaussHermiteRule& rule() const noexcept { return rule_; }
  const CholeskyFactor& factor() const noexcept { return factor_; }

 private:
  GaussHermiteRule rule_;
  CholeskyFactor factor_;
  std::vector<TraitPair> nodes_;
  std::vector<double> weights_;
};

}  // namespace ctdc
