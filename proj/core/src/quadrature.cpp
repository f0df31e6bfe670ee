#include "ctdc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctdc/error.hpp"

namespace ctdc {

double TraitCovariance::correlation() const {
  const double d = std::sqrt(s11 * s22);
  return d > 0.0 ? s12 / d : 0.0;
}

bool TraitCovariance::is_psd(double tol) const {
  const double scale = std::max({1.0, std::abs(s11), std::abs(s22)});
  return s11 >= -tol * scale && s22 >= -tol * scale && s12 * s12 <= s11 * s22 + tol * scale * scale;
}

CholeskyFactor psd_cholesky(const TraitCovariance& sigma) {
  if (!sigma.is_psd() || !std::isfinite(sigma.s11) || !std::isfinite(sigma.s12) || !std::isfinite(sigma.s22)) {
    throw_usage("covariance matrix is not positive semidefinite");
  }
  CholeskyFactor f;
  f.l11 = std::sqrt(std::max(0.0, sigma.s11));
  f.l21 = f.l11 > 0.0 ? sigma.s12 / f.l11 : 0.0;
  f.l22 = std::sqrt(std::max(0.0, sigma.s22 - f.l21 * f.l21));
  return f;
}

// Roots of the physicists' Hermite polynomial H_n by Newton iteration on the
// orthonormal recurrence, then rescaled to the standard normal weight.
GaussHermiteRule gauss_hermite_normal(int n) {
  if (n < 1) throw_usage("gauss_hermite_normal: need at least one node");
  constexpr double pim4 = 0.7511255444649425;  // pi^(-1/4)
  const int half = (n + 1) / 2;
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
  }

  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < half; ++i) {
    // x[i] descends from the largest root; mirror exactly for symmetry
    const double node = std::numbers::sqrt2 * x[static_cast<std::size_t>(i)];
    const double weight = w[static_cast<std::size_t>(i)] * inv_sqrt_pi;
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    const auto lo = static_cast<std::size_t>(i);
    rule.nodes[hi] = node;
    rule.nodes[lo] = -node;
    rule.weights[hi] = weight;
    rule.weights[lo] = weight;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;

  double total = 0.0;
  for (double v : rule.weights) total += v;
  for (double& v : rule.weights) v /= total;
  return rule;
}

QuadratureGrid QuadratureGrid::adapted(const TraitCovariance& sigma, int points_per_dim) {
  QuadratureGrid g;
  g.rule_ = gauss_hermite_normal(points_per_dim);
  g.factor_ = psd_cholesky(sigma);
  const std::size_t p = g.rule_.size();
  g.nodes_.reserve(p * p);
  g.weights_.reserve(p * p);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t s = 0; s < p; ++s) {
      g.nodes_.push_back(g.factor_.apply(g.rule_.nodes[r], g.rule_.nodes[s]));
      g.weights_.push_back(g.rule_.weights[r] * g.rule_.weights[s]);
    }
  }
  return g;
}

}  // namespace ctdc
