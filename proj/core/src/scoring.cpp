#include "ctdc/scoring.hpp"

#include <cmath>

#include "ctdc/error.hpp"
#include "ctdc/parallel.hpp"
#include "posterior_engine.hpp"

namespace ctdc {

namespace {

void check_alignment(const Dataset& data, const FixedParams& params) {
  params.check();
  if (params.num_tasks() != data.num_tasks()) throw_usage("parameters and data cover different numbers of tasks");
  for (std::size_t k = 0; k < data.num_tasks(); ++k) {
    if (params.task_ids[k] != data.task(k).id()) throw_usage("parameter task order does not match the data");
  }
}

struct Derivs {
  double value = 0.0;
  double g1 = 0.0, g2 = 0.0;     // d/d theta, d/d tau
  double h11 = 0.0, h22 = 0.0;   // cross term is zero
};

Derivs person_loglik(const Dataset& data, std::size_t person, const FixedParams& params, double theta, double tau) {
  Derivs d;
  for (std::size_t k = 0; k < data.num_tasks(); ++k) {
    const auto& cell = data.cell(person, k);
    if (!cell.present) continue;
    const auto& types = data.situation_types(k);
    const double a = params.betas[k] + theta;
    for (const auto& sc : cell.situations) {
      const ChoiceTerm t = choice_term(types[sc.type], a);
      d.value += sc.count * t.value;
      d.g1 += sc.count * t.d1;
      d.h11 += sc.count * t.d2;
    }
    if (cell.num_events >= 2) {
      const double s = params.gammas[k] + tau;
      const double rate = cell.active_span * std::exp(s);
      const double gaps = static_cast<double>(cell.num_events - 1);
      d.value += gaps * s - rate;
      d.g2 += gaps - rate;
      d.h22 -= rate;
    }
  }
  return d;
}

TraitEstimate prior_estimate(const Dataset& data, std::size_t person, const FixedParams& params) {
  TraitEstimate e;
  e.person_id = data.person_id(person);
  e.eap = {0.0, 0.0};
  e.posterior_sd = {std::sqrt(params.sigma.s11), std::sqrt(params.sigma.s22)};
  return e;
}

TraitEstimate eap_with(const Dataset& data, std::size_t person, const FixedParams& params,
                       detail::PosteriorEngine& engine, std::vector<double>& buf) {
  if (!data.person_has_data(person)) return prior_estimate(data, person, params);
  const detail::NodeLayout lay = engine.log_joint(person, buf);
  detail::PosteriorEngine::normalize(buf);
  const std::size_t P = engine.points();
  const auto& z = engine.rule().nodes;
  const CholeskyFactor& L = engine.factor();
  double m1 = 0.0, m2 = 0.0, q1 = 0.0, q2 = 0.0;
  for (std::size_t r = 0; r < P; ++r) {
    for (std::size_t s = 0; s < P; ++s) {
      const double w = buf[r * P + s];
      const TraitPair x = L.apply(lay.u1(z[r]), lay.u2(z[r], z[s]));
      m1 += w * x.theta;
      m2 += w * x.tau;
      q1 += w * x.theta * x.theta;
      q2 += w * x.tau * x.tau;
    }
  }
  TraitEstimate e;
  e.person_id = data.person_id(person);
  e.eap = {m1, m2};
  e.posterior_sd = {std::sqrt(std::max(0.0, q1 - m1 * m1)), std::sqrt(std::max(0.0, q2 - m2 * m2))};
  return e;
}

}  // namespace

double log_posterior_whitened(const Dataset& data, std::size_t person, const FixedParams& params, double z1,
                              double z2) {
  const TraitPair x = psd_cholesky(params.sigma).apply(z1, z2);
  return person_loglik(data, person, params, x.theta, x.tau).value - 0.5 * (z1 * z1 + z2 * z2);
}

TraitEstimate score_eap(const Dataset& data, std::size_t person, const FixedParams& params, int points_per_dim) {
  check_alignment(data, params);
  detail::PosteriorEngine engine(data, points_per_dim);
  const CholeskyFactor L = psd_cholesky(params.sigma);
  engine.set_params(params.betas, params.gammas, L);
  std::vector<double> buf(engine.nodes());
  return eap_with(data, person, params, engine, buf);
}

TraitPair score_map(const Dataset& data, std::size_t person, const FixedParams& params, TraitPair start) {
  check_alignment(data, params);
  if (!data.person_has_data(person)) return {0.0, 0.0};
  const CholeskyFactor L = psd_cholesky(params.sigma);

  double z1 = L.l11 > 0.0 ? start.theta / L.l11 : 0.0;
  double z2 = L.l22 > 0.0 ? (start.tau - L.l21 * z1) / L.l22 : 0.0;

  auto evaluate = [&](double a, double b, double* g1, double* g2, double* h11, double* h12, double* h22) {
    const TraitPair x = L.apply(a, b);
    const Derivs d = person_loglik(data, person, params, x.theta, x.tau);
    if (g1) {
      // chain rule through x = L z
      *g1 = L.l11 * d.g1 + L.l21 * d.g2 - a;
      *g2 = L.l22 * d.g2 - b;
      *h11 = L.l11 * L.l11 * d.h11 + L.l21 * L.l21 * d.h22 - 1.0;
      *h12 = L.l21 * L.l22 * d.h22;
      *h22 = L.l22 * L.l22 * d.h22 - 1.0;
    }
    return d.value - 0.5 * (a * a + b * b);
  };

  double g1, g2, h11, h12, h22;
  double f = evaluate(z1, z2, &g1, &g2, &h11, &h12, &h22);
  for (int iter = 0; iter < 100; ++iter) {
    if (std::max(std::abs(g1), std::abs(g2)) < 1e-8) return L.apply(z1, z2);
    // -H is positive definite: the likelihood is log-concave and the prior adds I.
    const double a11 = -h11, a12 = -h12, a22 = -h22;
    const double det = a11 * a22 - a12 * a12;
    const double d1 = (a22 * g1 - a12 * g2) / det;
    const double d2 = (a11 * g2 - a12 * g1) / det;
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half) {
      const double n1 = z1 + step * d1;
      const double n2 = z2 + step * d2;
      const double fn = evaluate(n1, n2, nullptr, nullptr, nullptr, nullptr, nullptr);
      if (std::isfinite(fn) && fn >= f - 1e-12 * std::abs(f)) {
        z1 = n1;
        z2 = n2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    f = evaluate(z1, z2, &g1, &g2, &h11, &h12, &h22);
  }
  if (std::max(std::abs(g1), std::abs(g2)) < 1e-8) return L.apply(z1, z2);
  throw_convergence("MAP Newton iteration did not converge for person " + data.person_id(person));
}

std::vector<TraitEstimate> score_persons(const Dataset& data, const FixedParams& params,
                                         const ScoringOptions& options) {
  check_alignment(data, params);
  if (options.points_per_dim < 2) throw_usage("scoring needs at least 2 points per dimension");
  detail::PosteriorEngine engine(data, options.points_per_dim);
  engine.set_params(params.betas, params.gammas, psd_cholesky(params.sigma));
  std::vector<TraitEstimate> out;
  out.reserve(data.num_persons());
  std::vector<double> buf(engine.nodes());
  for (std::size_t i = 0; i < data.num_persons(); ++i) out.push_back(eap_with(data, i, params, engine, buf));
  if (options.compute_map) {
    parallel_for(out.size(), options.jobs,
                 [&](std::size_t i) { out[i].map = score_map(data, i, params, out[i].eap); });
  }
  return out;
}

}  // namespace ctdc
