#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ctdc/dataset.hpp"
#include "ctdc/quadrature.hpp"

namespace ctdc::detail {

// Sum over a person's choice situations in one task at linear predictor a.
struct ChoiceSum {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Person-specific node placement in whitened coordinates: u = m + B z with
// B lower triangular; traits are x = L u.
struct NodeLayout {
  double m1 = 0.0, m2 = 0.0;
  double b11 = 1.0, b21 = 0.0, b22 = 1.0;

  double u1(double z1) const { return m1 + b11 * z1; }
  double u2(double z1, double z2) const { return m2 + b21 * z1 + b22 * z2; }
};

// Adaptive Gauss-Hermite integration of each person's likelihood against the
// N(0, I) prior on u, with nodes centred at the posterior mode and scaled by
// the inverse curvature there. The prior on u does not depend on the
// parameters, so (beta, gamma, L) enter only through the likelihood.
class PosteriorEngine {
 public:
  PosteriorEngine(const Dataset& data, int points_per_dim);

  void set_params(const std::vector<double>& betas, const std::vector<double>& gammas, const CholeskyFactor& factor);

  std::size_t points() const noexcept { return p_; }
  std::size_t nodes() const noexcept { return p_ * p_; }
  const GaussHermiteRule& rule() const noexcept { return rule_; }
  const CholeskyFactor& factor() const noexcept { return factor_; }
  const Dataset& data() const noexcept { return data_; }

  // Places the nodes for `person` and writes log(weight) + log-likelihood per
  // node (q = r * P + s). The mode search is warm-started from the previous
  // call for the same person.
  NodeLayout log_joint(std::size_t person, std::vector<double>& out);

  // Normalizes log joint values in place to posterior weights and returns
  // their log-sum-exp. Throws Error(convergence) on total underflow.
  static double normalize(std::vector<double>& values);

  // Choice log-likelihood of person i in task k at a = beta_k + theta.
  ChoiceSum choice(std::size_t person, std::size_t k, double a, bool derivatives) const;

 private:
  struct CompiledType {
    double chosen = 0.0;
    std::vector<std::pair<std::uint32_t, double>> mult;  // (index into values, multiplicity)
  };
  struct Timing {
    double gaps = 0.0;                    // sum_k (m_k - 1)
    std::vector<std::pair<std::size_t, double>> spans;  // (k, D_k), tasks with m_k >= 2
  };

  NodeLayout find_layout(std::size_t person);

  const Dataset& data_;
  std::size_t p_;
  GaussHermiteRule rule_;
  std::vector<double> log_w_;  // log w_r + z_r^2 / 2
  std::vector<std::vector<double>> values_;            // [k] distinct effectiveness values
  std::vector<std::vector<CompiledType>> types_;       // [k][type]
  std::vector<Timing> timing_;                         // [person]
  std::vector<std::array<double, 2>> modes_;           // warm starts
  std::vector<double> betas_, gammas_, exp_gammas_;
  CholeskyFactor factor_;
  std::vector<double> e1_, e2_;
  mutable std::vector<double> exp_buf_;
};

}  // namespace ctdc::detail
